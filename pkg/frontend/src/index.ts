/**
 * Iframe entry point: the host page supplies learner_id and question_id as
 * URL query parameters (optionally gateway= for a non-same-origin service).
 */

import { HttpGatewayClient } from './client.js';
import { LearnerPanel } from './panel.js';

export function mountFromLocation(root: HTMLElement): Promise<LearnerPanel> {
    const params = new URLSearchParams(window.location.search);
    const learnerId = params.get('learner_id');
    const questionId = params.get('question_id');
    if (!learnerId || !questionId) {
        root.textContent = 'Missing learner_id or question_id query parameter.';
        return Promise.reject(new Error('missing required query parameters'));
    }
    const client = new HttpGatewayClient(params.get('gateway') ?? '');
    const panel = new LearnerPanel(root, client, { learnerId, questionId });
    return panel.init().then(() => panel);
}

const container = document.getElementById('app');
if (container) {
    void mountFromLocation(container).catch((error) => {
        console.error('panel failed to mount', error);
    });
}
