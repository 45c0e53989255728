/**
 * Hover/focus tooltips for highlighted terms.
 *
 * The tooltip text lives in a data attribute until shown, so the page text
 * stays concise; it is added to the DOM only while hovered or focused.
 */

let activeTooltip: HTMLElement | null = null;

function showTooltip(term: HTMLElement): void {
    hideTooltip();
    const text = term.dataset.tooltip;
    if (!text) return;
    const tooltip = document.createElement('div');
    tooltip.className = 'sf-tooltip';
    tooltip.setAttribute('role', 'tooltip');
    tooltip.textContent = text;
    tooltip.style.position = 'absolute';
    const rect = term.getBoundingClientRect();
    tooltip.style.left = `${rect.left + window.scrollX}px`;
    tooltip.style.top = `${rect.bottom + window.scrollY + 4}px`;
    document.body.appendChild(tooltip);
    activeTooltip = tooltip;
}

function hideTooltip(): void {
    if (activeTooltip) {
        activeTooltip.remove();
        activeTooltip = null;
    }
}

/** Wire tooltip behaviour for every .sf-term under root (hover and keyboard focus). */
export function attachTooltips(root: HTMLElement): void {
    for (const element of Array.from(root.querySelectorAll<HTMLElement>('.sf-term'))) {
        element.addEventListener('mouseenter', () => showTooltip(element));
        element.addEventListener('mouseleave', hideTooltip);
        element.addEventListener('focus', () => showTooltip(element));
        element.addEventListener('blur', hideTooltip);
    }
}

export function currentTooltip(): HTMLElement | null {
    return activeTooltip;
}
