// Mirrors the service's /query wire contract. The UI never computes on
// these values beyond formatting; the response is the single source of truth.

export type Strategy = "bm25" | "tfidf" | "dense" | "hybrid";

export interface QueryRequest {
  question: string;
  strategy: Strategy;
  depth: number;
  keep_n: number;
}

export interface DocumentOut {
  PMID: string;
  title: string;
  score: number;
  stage: string;
}

export interface Timings {
  retrieval_ms: number;
  rerank_ms: number;
  generation_ms: number;
  total_ms: number;
}

export interface QueryResponse {
  response: string;
  used_PMIDs: string[];
  documents: DocumentOut[];
  timings: Timings;
  flags: string[];
}

export class ServiceError extends Error {
  constructor(
    readonly status: number,
    message: string,
    readonly stage?: string,
  ) {
    super(message);
    this.name = "ServiceError";
  }
}
