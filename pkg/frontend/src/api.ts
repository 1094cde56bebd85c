import type {
  DecisionPayload,
  ExplanationDetail,
  KbPayload,
  PointsPayload,
  SessionView,
} from "./types.js";

export class ApiError extends Error {
  constructor(
    public status: number,
    public code: string,
    message: string,
  ) {
    super(message);
  }
}

async function request<T>(base: string, path: string, init?: RequestInit): Promise<T> {
  let resp: Response;
  try {
    resp = await fetch(`${base}${path}`, init);
  } catch (err) {
    throw new ApiError(0, "network_error", String(err));
  }
  const body = await resp.json().catch(() => ({}));
  if (!resp.ok) {
    throw new ApiError(resp.status, body.code ?? "http_error", body.message ?? resp.statusText);
  }
  return body as T;
}

export class ApiClient {
  constructor(public base: string = "") {}

  listSessions(): Promise<{ sessions: string[] }> {
    return request(this.base, "/api/sessions");
  }

  getSession(id: string): Promise<SessionView> {
    return request(this.base, `/api/sessions/${encodeURIComponent(id)}`);
  }

  getExplanation(id: string, recId: string): Promise<ExplanationDetail> {
    return request(
      this.base,
      `/api/sessions/${encodeURIComponent(id)}/recommendations/${encodeURIComponent(recId)}/explanation`,
    );
  }

  postDecisions(id: string, token: string, decisions: DecisionPayload[]): Promise<unknown> {
    return request(this.base, `/api/sessions/${encodeURIComponent(id)}/decisions`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ iteration_token: token, decisions }),
    });
  }

  iterate(id: string, token: string): Promise<SessionView> {
    return request(this.base, `/api/sessions/${encodeURIComponent(id)}/iterate`, {
      method: "POST",
      headers: { "content-type": "application/json" },
      body: JSON.stringify({ iteration_token: token }),
    });
  }

  getKb(id: string): Promise<KbPayload> {
    return request(this.base, `/api/sessions/${encodeURIComponent(id)}/kb`);
  }

  getPoints(id: string, fx: number, fy: number): Promise<PointsPayload> {
    return request(this.base, `/api/sessions/${encodeURIComponent(id)}/points?fx=${fx}&fy=${fy}`);
  }
}

/** Unpack a packed-bits mask payload into a boolean array of length n. */
export function unpackMask(mask: { n: number; b64: string }): boolean[] {
  const raw = atob(mask.b64);
  const out: boolean[] = new Array(mask.n);
  for (let i = 0; i < mask.n; i++) {
    const byte = raw.charCodeAt(i >> 3);
    out[i] = (byte & (0x80 >> (i & 7))) !== 0;
  }
  return out;
}
