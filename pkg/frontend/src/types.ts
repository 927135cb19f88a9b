/** Wire types matching the annotation service JSON API. */

export type Mode = "single" | "ranked";

export interface Task {
  done: false;
  item_id: string;
  image_url: string;
  domain: string;
  mode: Mode;
  remaining: number;
}

export interface Done {
  done: true;
}

export type NextResponse = Task | Done;

export interface AnnotationBody {
  item_id: string;
  annotator: string;
  ranks: string[];
  mode: Mode;
  reason?: string;
}

export interface SubmitAck {
  ok: boolean;
  item_id: string;
  overwrote: boolean;
}

export interface AnnotatorStats {
  submitted: number;
  label_fractions: { "1": number; "2": number; "3": number };
  skipped: Record<string, number>;
}

export interface PairRates {
  rank1: number;
  rank2: number;
  rank3: number;
  any_single: number;
  items: number;
}

export interface Stats {
  mode: Mode;
  items: number;
  annotators: Record<string, AnnotatorStats>;
  insufficient_data: boolean;
  kappa: number | null;
  kappa_items: number;
  kappa_dropped: number;
  pairwise: Record<string, PairRates>;
}

export interface ApiErrorBody {
  error: string;
  message: string;
  details?: Record<string, unknown>;
}
