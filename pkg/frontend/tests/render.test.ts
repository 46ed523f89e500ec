import { readFileSync } from "node:fs";
import { join } from "node:path";
import { describe, expect, it } from "vitest";

import {
  escapeHtml,
  pubmedUrl,
  renderAnswer,
  renderDocuments,
  renderErrorBanner,
  renderResult,
  renderTimings,
} from "../src/render.js";
import { QueryResponse, ServiceError } from "../src/types.js";

const fixture = (name: string): QueryResponse =>
  JSON.parse(readFileSync(join(__dirname, "fixtures", name), "utf-8"));

const ok = fixture("response_ok.json");
const noContext = fixture("response_no_context.json");

describe("pubmedUrl", () => {
  it("builds the canonical PubMed URL", () => {
    expect(pubmedUrl("123")).toBe("https://pubmed.ncbi.nlm.nih.gov/123/");
  });
});

describe("renderAnswer", () => {
  it("renders one PubMed link per used PMID, in order", () => {
    const html = renderAnswer(ok);
    const links = [...html.matchAll(/class="pmid-link" href="([^"]+)"/g)].map((m) => m[1]);
    expect(links).toEqual([
      "https://pubmed.ncbi.nlm.nih.gov/3/",
      "https://pubmed.ncbi.nlm.nih.gov/4/",
    ]);
  });

  it("shows the response text verbatim (escaped)", () => {
    const spicy = { ...ok, response: 'yes <script>alert("x")</script>' };
    const html = renderAnswer(spicy);
    expect(html).toContain("yes &lt;script&gt;");
    expect(html).not.toContain("<script>");
  });

  it("renders flags when present", () => {
    expect(renderAnswer(noContext)).toContain('<span class="flag">no_context</span>');
  });

  it("matches the snapshot for the fixture response", () => {
    expect(renderAnswer(ok)).toMatchSnapshot();
  });
});

describe("renderDocuments", () => {
  it("shows title, score and stage per document", () => {
    const html = renderDocuments(ok.documents);
    expect(html).toContain("Synthetic record 3");
    expect(html).toContain("0.3333");
    expect(html).toContain("rerank");
  });

  it("handles the empty document list", () => {
    expect(renderDocuments([])).toContain("No documents retrieved.");
  });

  it("matches the snapshot for the fixture response", () => {
    expect(renderDocuments(ok.documents)).toMatchSnapshot();
  });
});

describe("renderTimings", () => {
  it("renders four labeled segments that sum to the total width", () => {
    const html = renderTimings(ok.timings);
    const widths = [...html.matchAll(/width:([0-9.]+)%/g)].map((m) => Number(m[1]));
    expect(widths).toHaveLength(4);
    const sum = widths.reduce((a, b) => a + b, 0);
    expect(Math.abs(sum - 100)).toBeLessThan(0.1);
    for (const stage of ["retrieval", "rerank", "generation", "overhead"]) {
      expect(html).toContain(`data-stage="${stage}"`);
    }
    expect(html).toContain("total 2060.0 ms");
  });

  it("survives a zero total", () => {
    const html = renderTimings({ retrieval_ms: 0, rerank_ms: 0, generation_ms: 0, total_ms: 0 });
    expect(html).toContain('width:0.00%');
  });

  it("matches the snapshot for the fixture response", () => {
    expect(renderTimings(ok.timings)).toMatchSnapshot();
  });
});

describe("renderResult", () => {
  it("composes answer, documents and timings", () => {
    const html = renderResult(ok);
    expect(html).toContain('class="answer"');
    expect(html).toContain('class="documents"');
    expect(html).toContain('class="timings"');
  });

  it("matches the snapshot for the no-context fixture", () => {
    expect(renderResult(noContext)).toMatchSnapshot();
  });
});

describe("renderErrorBanner", () => {
  it("names the failing stage", () => {
    const html = renderErrorBanner(new ServiceError(502, "rerank backend failed", "rerank"));
    expect(html).toContain("HTTP 502");
    expect(html).toContain("stage: rerank");
    expect(html).toContain('role="alert"');
  });

  it("renders a 400 banner without a stage", () => {
    const html = renderErrorBanner(new ServiceError(400, "empty question"));
    expect(html).toContain("empty question");
    expect(html).not.toContain("error-stage");
  });
});

describe("escapeHtml", () => {
  it("escapes all five special characters", () => {
    expect(escapeHtml(`<a href="x">&'</a>`)).toBe("&lt;a href=&quot;x&quot;&gt;&amp;&#39;&lt;/a&gt;");
  });
});
