// Integration against a locally running service in stub mode, e.g.
//   ragqa synth --docs 2000 --questions-count 5 --out-corpus c.jsonl --out-questions q.json
//   ragqa serve --corpus c.jsonl --reranker overlap --generator stub:yes --port 8931
//   RAGQA_SERVICE_URL=http://127.0.0.1:8931 npm test
import { describe, expect, it } from "vitest";

import { postQuery } from "../src/api.js";
import { renderResult } from "../src/render.js";
import { ServiceError } from "../src/types.js";

const base = process.env.RAGQA_SERVICE_URL;

describe.skipIf(!base)("live service", () => {
  it("answers a fixture question and renders links + four timing segments", async () => {
    const response = await postQuery(base!, {
      question: "Is topic1term associated with biomarker?",
      strategy: "hybrid",
      depth: 50,
      keep_n: 10,
    });
    expect(typeof response.response).toBe("string");
    const html = renderResult(response);
    const links = [...html.matchAll(/class="pmid-link"/g)];
    expect(links).toHaveLength(response.used_PMIDs.length);
    expect([...html.matchAll(/class="timing-segment/g)]).toHaveLength(4);
  });

  it("surfaces a service error as a typed failure", async () => {
    const err = await postQuery(base!, {
      question: "   ",
      strategy: "hybrid",
      depth: 50,
      keep_n: 10,
    }).catch((e) => e);
    expect(err).toBeInstanceOf(ServiceError);
    expect(err.status).toBe(400);
  });
});
