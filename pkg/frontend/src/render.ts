import { DocumentOut, QueryResponse, ServiceError, Timings } from "./types.js";

// Pure HTML-string renderers so the view layer is snapshot-testable without
// a browser. Everything user- or service-provided is escaped.

export function escapeHtml(text: string): string {
  return text
    .replace(/&/g, "&amp;")
    .replace(/</g, "&lt;")
    .replace(/>/g, "&gt;")
    .replace(/"/g, "&quot;")
    .replace(/'/g, "&#39;");
}

export function pubmedUrl(pmid: string): string {
  return `https://pubmed.ncbi.nlm.nih.gov/${encodeURIComponent(pmid)}/`;
}

function citationLink(pmid: string): string {
  return `<a class="pmid-link" href="${pubmedUrl(pmid)}" target="_blank" rel="noopener">PMID ${escapeHtml(pmid)}</a>`;
}

export function renderAnswer(response: QueryResponse): string {
  // displayed PMIDs are exactly used_PMIDs, in order
  const citations =
    response.used_PMIDs.length > 0
      ? `<ul class="citations">${response.used_PMIDs.map((p) => `<li>${citationLink(p)}</li>`).join("")}</ul>`
      : `<p class="citations-empty">No PMIDs cited.</p>`;
  const flags =
    response.flags.length > 0
      ? `<p class="flags">${response.flags.map((f) => `<span class="flag">${escapeHtml(f)}</span>`).join(" ")}</p>`
      : "";
  return `<section class="answer">
  <h2>Answer</h2>
  <p class="answer-text">${escapeHtml(response.response)}</p>
  ${citations}
  ${flags}
</section>`;
}

export function renderDocuments(documents: DocumentOut[]): string {
  if (documents.length === 0) {
    return `<section class="documents"><h2>Documents</h2><p class="documents-empty">No documents retrieved.</p></section>`;
  }
  const rows = documents
    .map(
      (doc, i) => `<tr>
    <td>${i + 1}</td>
    <td><a href="${pubmedUrl(doc.PMID)}" target="_blank" rel="noopener">${escapeHtml(doc.PMID)}</a></td>
    <td>${escapeHtml(doc.title)}</td>
    <td class="num">${doc.score.toFixed(4)}</td>
    <td>${escapeHtml(doc.stage)}</td>
  </tr>`,
    )
    .join("\n");
  return `<section class="documents">
  <h2>Documents</h2>
  <table>
    <thead><tr><th>#</th><th>PMID</th><th>Title</th><th>Score</th><th>Stage</th></tr></thead>
    <tbody>${rows}</tbody>
  </table>
</section>`;
}

/** Stacked bar of four labeled segments (retrieval, rerank, generation and
 * the orchestration remainder) whose widths sum to the total. */
export function renderTimings(timings: Timings): string {
  const total = timings.total_ms;
  const overhead = Math.max(0, total - timings.retrieval_ms - timings.rerank_ms - timings.generation_ms);
  const parts: Array<[string, number]> = [
    ["retrieval", timings.retrieval_ms],
    ["rerank", timings.rerank_ms],
    ["generation", timings.generation_ms],
    ["overhead", overhead],
  ];
  const width = (ms: number) => (total > 0 ? ((ms / total) * 100).toFixed(2) : "0.00");
  const segments = parts
    .map(
      ([name, ms]) =>
        `<span class="timing-segment timing-${name}" style="width:${width(ms)}%" ` +
        `data-stage="${name}" data-ms="${ms.toFixed(1)}" title="${name}: ${ms.toFixed(1)} ms"></span>`,
    )
    .join("");
  const labels = parts
    .map(([name, ms]) => `<span class="timing-label">${name} ${ms.toFixed(1)} ms</span>`)
    .join(" ");
  return `<section class="timings">
  <h2>Timing</h2>
  <div class="timing-bar">${segments}</div>
  <p class="timing-labels">${labels} <span class="timing-total">total ${total.toFixed(1)} ms</span></p>
</section>`;
}

export function renderResult(response: QueryResponse): string {
  return [renderAnswer(response), renderDocuments(response.documents), renderTimings(response.timings)].join("\n");
}

export function renderErrorBanner(error: ServiceError): string {
  const stage = error.stage ? `<span class="error-stage">stage: ${escapeHtml(error.stage)}</span>` : "";
  return `<div class="banner error" role="alert">
  <strong>Request failed (HTTP ${error.status})</strong> ${escapeHtml(error.message)} ${stage}
</div>`;
}
