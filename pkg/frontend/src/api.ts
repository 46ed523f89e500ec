import { QueryRequest, QueryResponse, ServiceError } from "./types.js";

/** POST the request to the service; non-2xx becomes a ServiceError carrying
 * the failing stage when the service names one. No retries. */
export async function postQuery(
  baseUrl: string,
  request: QueryRequest,
  signal?: AbortSignal,
): Promise<QueryResponse> {
  const resp = await fetch(`${baseUrl}/query`, {
    method: "POST",
    headers: { "Content-Type": "application/json" },
    body: JSON.stringify(request),
    signal,
  });
  if (!resp.ok) {
    let message = resp.statusText || `HTTP ${resp.status}`;
    let stage: string | undefined;
    try {
      const body = (await resp.json()) as { error?: string; stage?: string };
      if (body.error) message = body.error;
      stage = body.stage;
    } catch {
      // non-JSON error body; keep the status text
    }
    throw new ServiceError(resp.status, message, stage);
  }
  return (await resp.json()) as QueryResponse;
}
