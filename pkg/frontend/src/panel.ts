/**
 * The embeddable learner panel: answer entry and revision on one side,
 * rendered feedback and the slide reference area on the other.
 */

import type { GatewayClient } from './client.js';
import { renderFeedback } from './feedback-view.js';
import { type AudioSink, NarrationPlayer, WebAudioSink } from './narration-player.js';
import type { FeedbackResponseJson, PlaybackState, QuestionViewJson } from './types.js';

export interface PanelOptions {
    learnerId: string;
    questionId: string;
    audioSink?: AudioSink;
}

export interface PanelState {
    attempt: number;
    lastResponse: FeedbackResponseJson | null;
    playback: PlaybackState;
    pending: boolean;
}

export class LearnerPanel {
    state: PanelState = { attempt: 0, lastResponse: null, playback: 'idle', pending: false };
    question: QuestionViewJson | null = null;
    player: NarrationPlayer | null = null;

    private form!: HTMLFormElement;
    private submitButton!: HTMLButtonElement;
    private feedbackPane!: HTMLElement;
    private attemptLabel!: HTMLElement;
    private statusLabel!: HTMLElement;

    constructor(
        private readonly root: HTMLElement,
        private readonly client: GatewayClient,
        private readonly options: PanelOptions,
    ) {}

    async init(): Promise<void> {
        this.question = await this.client.fetchQuestion(this.options.questionId);
        this.render();
    }

    private render(): void {
        const question = this.question!;
        this.root.replaceChildren();
        this.root.classList.add('sf-panel');

        this.feedbackPane = document.createElement('section');
        this.feedbackPane.className = 'sf-feedback-pane';
        const placeholder = document.createElement('p');
        placeholder.className = 'sf-placeholder';
        placeholder.textContent = 'Submit your answer to receive feedback.';
        this.feedbackPane.appendChild(placeholder);

        const answerPane = document.createElement('section');
        answerPane.className = 'sf-answer-pane';
        const heading = document.createElement('h3');
        heading.textContent = 'Your Answer';
        answerPane.appendChild(heading);

        this.form = document.createElement('form');
        this.form.className = 'sf-answer-form';
        if (question.kind === 'MCQ') {
            for (const [optionId, optionText] of question.options) {
                const label = document.createElement('label');
                label.className = 'sf-option';
                const radio = document.createElement('input');
                radio.type = 'radio';
                radio.name = 'answer';
                radio.value = optionId;
                label.appendChild(radio);
                label.appendChild(document.createTextNode(` ${optionText}`));
                this.form.appendChild(label);
            }
        } else {
            const textarea = document.createElement('textarea');
            textarea.name = 'answer';
            textarea.className = 'sf-free-text';
            textarea.rows = 4;
            this.form.appendChild(textarea);
        }

        this.submitButton = document.createElement('button');
        this.submitButton.type = 'submit';
        this.submitButton.className = 'sf-submit';
        this.submitButton.textContent = 'Submit';
        this.form.appendChild(this.submitButton);

        this.attemptLabel = document.createElement('span');
        this.attemptLabel.className = 'sf-attempt';
        this.form.appendChild(this.attemptLabel);

        this.statusLabel = document.createElement('span');
        this.statusLabel.className = 'sf-status';
        this.form.appendChild(this.statusLabel);

        this.form.addEventListener('submit', (event) => {
            event.preventDefault();
            void this.submit();
        });
        answerPane.appendChild(this.form);

        this.root.appendChild(this.feedbackPane);
        this.root.appendChild(answerPane);
    }

    currentAnswer(): string {
        const field = this.form.elements.namedItem('answer');
        if (field instanceof HTMLTextAreaElement) {
            return field.value.trim();
        }
        if (field instanceof RadioNodeList) {
            return field.value;
        }
        return (field as HTMLInputElement | null)?.value ?? '';
    }

    /** Submit or revise; one in-flight submission at a time, answer preserved. */
    async submit(): Promise<FeedbackResponseJson | null> {
        if (this.state.pending) return null;
        const answer = this.currentAnswer();
        if (!answer) {
            this.statusLabel.textContent = 'Enter an answer first.';
            return null;
        }
        this.state.pending = true;
        this.submitButton.disabled = true;
        this.statusLabel.textContent = 'Submitting…';
        try {
            const response = await this.client.submit(
                this.options.learnerId,
                this.options.questionId,
                answer,
            );
            this.state.lastResponse = response;
            this.state.attempt = response.attempt_number;
            this.attemptLabel.textContent = `Attempt ${response.attempt_number}`;
            this.statusLabel.textContent = '';
            this.showFeedback(response);
            return response;
        } catch (error) {
            this.statusLabel.textContent = 'Submission failed. Please retry.';
            return null;
        } finally {
            this.state.pending = false;
            this.submitButton.disabled = false;
        }
    }

    private showFeedback(response: FeedbackResponseJson): void {
        const { narrationButton } = renderFeedback(this.feedbackPane, response, this.client);
        if (narrationButton) {
            narrationButton.addEventListener('click', () => {
                void this.toggleNarration(response.submission_id, narrationButton);
            });
        }
    }

    private async toggleNarration(submissionId: string, button: HTMLButtonElement): Promise<void> {
        if (this.player && (this.state.playback === 'playing' || this.state.playback === 'buffering')) {
            await this.player.stop();
            button.textContent = 'AI Narration';
            return;
        }
        const sink = this.options.audioSink ?? new WebAudioSink();
        this.player = new NarrationPlayer(this.client, sink, (state) => {
            this.state.playback = state;
            button.dataset.playback = state;
            if (state === 'buffering') button.textContent = 'Buffering…';
            else if (state === 'playing') button.textContent = 'Stop narration';
            else button.textContent = 'AI Narration';
        });
        await this.player.play(submissionId);
    }
}
