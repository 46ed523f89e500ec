import { postQuery } from "./api.js";
import { QueryRequest, QueryResponse, ServiceError } from "./types.js";

export type RequestStatus = "idle" | "loading" | "done" | "error" | "cancelled";

/** Controls map 1:1 onto QueryRequest fields; the last response and the
 * request status are the only other state (nothing is persisted). */
export interface UiQueryState {
  question: string;
  strategy: QueryRequest["strategy"];
  depth: number;
  keepN: number;
  status: RequestStatus;
  lastResponse?: QueryResponse;
  lastError?: ServiceError;
}

export function initialState(): UiQueryState {
  return { question: "", strategy: "hybrid", depth: 50, keepN: 10, status: "idle" };
}

export function toRequest(state: UiQueryState): QueryRequest {
  return {
    question: state.question,
    strategy: state.strategy,
    depth: state.depth,
    keep_n: state.keepN,
  };
}

type Poster = typeof postQuery;

/** One in-flight query at a time: submitting aborts the previous request. */
export class QueryController {
  private inflight: AbortController | null = null;

  constructor(
    private readonly baseUrl: string,
    private readonly poster: Poster = postQuery,
  ) {}

  async submit(state: UiQueryState): Promise<UiQueryState> {
    this.inflight?.abort();
    const controller = new AbortController();
    this.inflight = controller;
    try {
      const response = await this.poster(this.baseUrl, toRequest(state), controller.signal);
      if (controller.signal.aborted) {
        return { ...state, status: "cancelled" };
      }
      return { ...state, status: "done", lastResponse: response, lastError: undefined };
    } catch (err) {
      if (controller.signal.aborted) {
        return { ...state, status: "cancelled" };
      }
      const error =
        err instanceof ServiceError ? err : new ServiceError(0, err instanceof Error ? err.message : String(err));
      return { ...state, status: "error", lastError: error };
    } finally {
      if (this.inflight === controller) {
        this.inflight = null;
      }
    }
  }
}
