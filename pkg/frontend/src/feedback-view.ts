/**
 * Renders one feedback response: band dot, bold statement, explanation with
 * highlighted terms, underlined advice, and the slide reference area.
 */

import type { GatewayClient } from './client.js';
import { attachTooltips } from './tooltip.js';
import type { FeedbackResponseJson, StructuredFeedbackJson, TermSpanJson } from './types.js';
import { isStructured } from './types.js';

export const BAND_COLORS: Record<string, string> = {
    INCORRECT: '#d64545', // red
    PARTIAL: '#e0a92e', // amber
    CORRECT: '#3d9a50', // green
};

/** Wrap each term's surface text in a highlighted span, left to right. */
function renderSegment(
    text: string,
    terms: TermSpanJson[],
    segment: TermSpanJson['segment'],
): DocumentFragment {
    const fragment = document.createDocumentFragment();
    let cursor = 0;
    for (const term of terms.filter((t) => t.segment === segment)) {
        let at = text.indexOf(term.surface_text, cursor);
        if (at < 0) at = text.indexOf(term.surface_text);
        if (at < 0) continue;
        fragment.appendChild(document.createTextNode(text.slice(cursor, at)));
        const mark = document.createElement('mark');
        mark.className = 'sf-term';
        mark.tabIndex = 0;
        mark.textContent = term.surface_text;
        mark.dataset.tooltip = term.tooltip_text;
        fragment.appendChild(mark);
        cursor = at + term.surface_text.length;
    }
    fragment.appendChild(document.createTextNode(text.slice(cursor)));
    return fragment;
}

function renderStructured(container: HTMLElement, feedback: StructuredFeedbackJson): void {
    const header = document.createElement('div');
    header.className = 'sf-header';
    const dot = document.createElement('span');
    dot.className = 'sf-band-dot';
    dot.dataset.band = feedback.band;
    dot.style.backgroundColor = BAND_COLORS[feedback.band];
    dot.title = feedback.band;
    header.appendChild(dot);
    const statement = document.createElement('strong');
    statement.className = 'sf-statement';
    statement.appendChild(renderSegment(feedback.statement, feedback.terms, 'statement'));
    header.appendChild(statement);
    container.appendChild(header);

    const explanation = document.createElement('p');
    explanation.className = 'sf-explanation';
    explanation.appendChild(renderSegment(feedback.explanation, feedback.terms, 'explanation'));
    container.appendChild(explanation);

    const advice = document.createElement('p');
    advice.className = 'sf-advice-line';
    const underlined = document.createElement('u');
    underlined.className = 'sf-advice';
    underlined.appendChild(renderSegment(feedback.advice, feedback.terms, 'advice'));
    advice.appendChild(underlined);
    container.appendChild(advice);
}

export interface RenderedFeedback {
    narrationButton: HTMLButtonElement | null;
}

export function renderFeedback(
    container: HTMLElement,
    response: FeedbackResponseJson,
    client: GatewayClient,
): RenderedFeedback {
    container.replaceChildren();
    container.classList.add('sf-feedback');

    if (!isStructured(response.feedback)) {
        // fallback / baseline path: message verbatim, no band dot
        const message = document.createElement('p');
        message.className = 'sf-message';
        message.textContent = response.feedback.message;
        container.appendChild(message);
        for (const link of response.deck_links) {
            const anchor = document.createElement('a');
            anchor.className = 'sf-deck-link';
            anchor.href = link;
            anchor.textContent = 'Lecture slides';
            anchor.target = '_blank';
            container.appendChild(anchor);
        }
        return { narrationButton: null };
    }

    renderStructured(container, response.feedback);

    let narrationButton: HTMLButtonElement | null = null;
    if (response.slide !== null) {
        const reference = document.createElement('section');
        reference.className = 'sf-reference';
        const heading = document.createElement('h3');
        heading.textContent = 'Reference Material';
        reference.appendChild(heading);

        const image = document.createElement('img');
        image.className = 'sf-slide-image';
        image.src = client.slideUrl(response.slide.image_url);
        image.alt = 'Most relevant slide page';
        reference.appendChild(image);

        const deckLink = document.createElement('a');
        deckLink.className = 'sf-deck-link';
        deckLink.href = response.slide.deck_source_uri;
        deckLink.textContent = 'Open full slide deck';
        deckLink.target = '_blank';
        reference.appendChild(deckLink);

        if (response.narration_available) {
            narrationButton = document.createElement('button');
            narrationButton.type = 'button';
            narrationButton.className = 'sf-narration-button';
            narrationButton.textContent = 'AI Narration';
            reference.appendChild(narrationButton);
        }
        container.appendChild(reference);
    }

    attachTooltips(container);
    return { narrationButton };
}
