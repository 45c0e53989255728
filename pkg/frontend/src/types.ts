/** Wire types of the feedback gateway consumed by the panel. */

export type Band = 'INCORRECT' | 'PARTIAL' | 'CORRECT';

export interface TermSpanJson {
    surface_text: string;
    tooltip_text: string;
    segment: 'statement' | 'explanation' | 'advice';
}

export interface StructuredFeedbackJson {
    score: number;
    band: Band;
    statement: string;
    explanation: string;
    advice: string;
    terms: TermSpanJson[];
    best_slide: [string, string] | null;
    model_meta: Record<string, unknown>;
}

/** Fallback and baseline responses carry a plain message and no band. */
export interface MessageFeedbackJson {
    message: string;
    degraded: boolean;
}

export type FeedbackJson = StructuredFeedbackJson | MessageFeedbackJson;

export function isStructured(feedback: FeedbackJson): feedback is StructuredFeedbackJson {
    return (feedback as StructuredFeedbackJson).band !== undefined;
}

export interface SlideJson {
    page_id: string;
    image_url: string;
    deck_source_uri: string;
}

export interface FeedbackResponseJson {
    submission_id: string;
    attempt_number: number;
    feedback: FeedbackJson;
    slide: SlideJson | null;
    narration_available: boolean;
    cache_hit: boolean;
    deck_links: string[];
}

export interface QuestionViewJson {
    question_id: string;
    kind: 'MCQ' | 'OEQ';
    stem_text: string;
    image_refs: string[];
    options: [string, string][];
    max_score: number;
}

export interface NarrationChunk {
    seq: number;
    last: boolean;
    payload: Uint8Array;
}

export type PlaybackState = 'idle' | 'buffering' | 'playing' | 'done' | 'error';
