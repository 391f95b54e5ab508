// Typed client for the /v1 JSON API. All server interactions in the UI
// go through this module.

export interface VersionInfo {
  id: number
  parent_id: number | null
  program: string
  prompt: string | null
  metric: number | null
  created_at: number
}

export interface Recommendation {
  kind: "logical" | "physical"
  name: string
  score: number
  prompt: string
  prompt_kind: string
}

export interface DiffChange {
  kind: "insert" | "delete"
  index: number
  text: string
}

export interface ApplyResult {
  version: VersionInfo
  exec: { status: string; metric: number | null; attempts: number; repaired: boolean }
}

export interface VersionTree {
  versions: VersionInfo[]
  current: number
}

export class ApiError extends Error {
  constructor(readonly status: number, message: string) {
    super(message)
  }
}

export class ApiClient {
  constructor(private readonly baseUrl: string = "") {}

  private async request<T>(method: string, path: string, body?: unknown): Promise<T> {
    const response = await fetch(`${this.baseUrl}/v1${path}`, {
      method,
      headers: body === undefined ? {} : { "Content-Type": "application/json" },
      body: body === undefined ? undefined : JSON.stringify(body),
    })
    const text = await response.text()
    const payload = text ? JSON.parse(text) : {}
    if (!response.ok) {
      throw new ApiError(response.status, payload.error ?? response.statusText)
    }
    return payload as T
  }

  createSession(csvText: string, label: string, name: string) {
    return this.request<{ session_id: string; version: VersionInfo }>(
      "POST", "/sessions", { csv_text: csvText, label, name },
    )
  }

  recommend(sessionId: string) {
    return this.request<{ recommendations: Recommendation[] }>(
      "POST", `/sessions/${sessionId}/recommend`,
    )
  }

  apply(sessionId: string, prompt: string, parentVersion?: number) {
    const body: Record<string, unknown> = { prompt }
    if (parentVersion !== undefined) body.parent_version = parentVersion
    return this.request<ApplyResult>("POST", `/sessions/${sessionId}/apply`, body)
  }

  versions(sessionId: string) {
    return this.request<VersionTree>("GET", `/sessions/${sessionId}/versions`)
  }

  diff(sessionId: string, a: number, b: number) {
    return this.request<{ changes: DiffChange[] }>(
      "GET", `/sessions/${sessionId}/diff?a=${a}&b=${b}`,
    )
  }

  rollback(sessionId: string, version: number) {
    return this.request<{ current: number; version: VersionInfo }>(
      "POST", `/sessions/${sessionId}/rollback`, { version },
    )
  }
}
