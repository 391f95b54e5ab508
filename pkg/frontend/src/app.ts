// Wires the page together: chat panel with slash suggestions, code box,
// version tree, metric chart, and diff view, all against the /v1 API.

import { ApiClient, ApiError, Recommendation } from "./api.js"
import { renderChart } from "./chart.js"
import { renderDiff, renderProgram } from "./diffview.js"
import {
  UiSessionState,
  emptyState,
  metricSeries,
  toggleDiffSelection,
  versionById,
  withTree,
} from "./state.js"
import { clearBubbles, fillPrompt, renderBubbles, slashTriggered } from "./suggestions.js"
import { renderTree } from "./tree.js"

interface Elements {
  csvInput: HTMLTextAreaElement
  labelInput: HTMLInputElement
  startButton: HTMLButtonElement
  sessionLabel: HTMLElement
  chatLog: HTMLElement
  suggestions: HTMLElement
  promptInput: HTMLInputElement
  sendButton: HTMLButtonElement
  codeBox: HTMLElement
  codeMeta: HTMLElement
  tree: SVGSVGElement
  chart: SVGSVGElement
  diff: HTMLElement
}

function grab(root: Document): Elements {
  const byId = <T>(id: string): T => {
    const el = root.getElementById(id)
    if (!el) throw new Error(`missing element #${id}`)
    return el as T
  }
  return {
    csvInput: byId("csv-input"),
    labelInput: byId("label-input"),
    startButton: byId("start-btn"),
    sessionLabel: byId("session-label"),
    chatLog: byId("chat-log"),
    suggestions: byId("suggestions"),
    promptInput: byId("prompt-input"),
    sendButton: byId("send-btn"),
    codeBox: byId("code-box"),
    codeMeta: byId("code-meta"),
    tree: byId("tree"),
    chart: byId("chart"),
    diff: byId("diff"),
  }
}

export class App {
  state: UiSessionState = emptyState()
  private highlighted = new Set<number>()

  constructor(
    private readonly api: ApiClient,
    private readonly el: Elements,
  ) {}

  private log(role: "user" | "system", text: string): void {
    const entry = document.createElement("div")
    entry.className = `chat-entry chat-${role}`
    entry.textContent = text
    this.el.chatLog.appendChild(entry)
    this.el.chatLog.scrollTop = this.el.chatLog.scrollHeight
  }

  private setPending(pending: boolean): void {
    this.state = { ...this.state, pending }
    this.el.sendButton.disabled = pending || this.state.sessionId === null
    this.el.startButton.disabled = pending
  }

  private async refreshTree(): Promise<void> {
    if (!this.state.sessionId) return
    const tree = await this.api.versions(this.state.sessionId)
    this.state = withTree(this.state, tree.versions, tree.current)
    this.render()
  }

  render(): void {
    const current =
      this.state.currentId === null
        ? undefined
        : versionById(this.state, this.state.currentId)
    if (current) {
      renderProgram(this.el.codeBox, current.program, this.highlighted)
      this.el.codeMeta.textContent =
        current.metric === null
          ? `version ${current.id}`
          : `version ${current.id} · metric ${current.metric.toFixed(4)}`
    }
    renderTree(this.el.tree, this.state.versions, this.state.currentId,
      this.state.diffSelection, {
        onSelect: (id) => void this.rollbackTo(id),
        onDiffSelect: (id) => void this.selectForDiff(id),
      })
    renderChart(this.el.chart, metricSeries(this.state), this.state.currentId)
  }

  async startSession(): Promise<void> {
    this.setPending(true)
    try {
      const created = await this.api.createSession(
        this.el.csvInput.value, this.el.labelInput.value.trim(), "data",
      )
      this.state = { ...emptyState(), sessionId: created.session_id }
      this.el.sessionLabel.textContent = `session ${created.session_id.slice(0, 8)}…`
      this.highlighted = new Set()
      this.log("system", `session started; baseline metric ${created.version.metric?.toFixed(4)}`)
      await this.refreshTree()
    } catch (error) {
      this.log("system", `error: ${(error as Error).message}`)
    } finally {
      this.setPending(false)
    }
  }

  async onPromptInput(): Promise<void> {
    if (!this.state.sessionId) return
    if (!slashTriggered(this.el.promptInput.value)) {
      clearBubbles(this.el.suggestions)
      return
    }
    try {
      const reply = await this.api.recommend(this.state.sessionId)
      renderBubbles(this.el.suggestions, reply.recommendations, (rec) => this.pick(rec))
    } catch (error) {
      if (error instanceof ApiError && error.status === 409) {
        clearBubbles(this.el.suggestions)
        this.log("system", "all operation families already applied")
      } else {
        this.log("system", `error: ${(error as Error).message}`)
      }
    }
  }

  pick(rec: Recommendation): void {
    fillPrompt(this.el.promptInput, rec)
    clearBubbles(this.el.suggestions)
  }

  async send(): Promise<void> {
    const prompt = this.el.promptInput.value.trim()
    if (!prompt || !this.state.sessionId || this.state.pending) return
    this.setPending(true)
    clearBubbles(this.el.suggestions)
    this.log("user", prompt)
    try {
      const parent = this.state.currentId ?? undefined
      const applied = await this.api.apply(this.state.sessionId, prompt, parent)
      this.el.promptInput.value = ""
      if (parent !== undefined) {
        const diff = await this.api.diff(this.state.sessionId, parent, applied.version.id)
        this.highlighted = new Set(
          diff.changes.filter((c) => c.kind === "insert").map((c) => c.index),
        )
      }
      this.log(
        "system",
        `version ${applied.version.id} committed · metric ` +
          `${applied.exec.metric?.toFixed(4)} · attempts ${applied.exec.attempts}`,
      )
      await this.refreshTree()
    } catch (error) {
      this.log("system", `error: ${(error as Error).message}`)
    } finally {
      this.setPending(false)
    }
  }

  async rollbackTo(id: number): Promise<void> {
    if (!this.state.sessionId || this.state.pending) return
    this.setPending(true)
    try {
      await this.api.rollback(this.state.sessionId, id)
      this.highlighted = new Set()
      this.log("system", `rolled back to version ${id}`)
      await this.refreshTree()
    } catch (error) {
      this.log("system", `error: ${(error as Error).message}`)
    } finally {
      this.setPending(false)
    }
  }

  async selectForDiff(id: number): Promise<void> {
    this.state = toggleDiffSelection(this.state, id)
    this.render()
    if (this.state.diffSelection.length === 2 && this.state.sessionId) {
      const [a, b] = this.state.diffSelection
      try {
        const diff = await this.api.diff(this.state.sessionId, a, b)
        renderDiff(this.el.diff, diff.changes)
      } catch (error) {
        this.log("system", `error: ${(error as Error).message}`)
      }
    }
  }

  wire(): void {
    this.el.startButton.addEventListener("click", () => void this.startSession())
    this.el.promptInput.addEventListener("input", () => void this.onPromptInput())
    this.el.sendButton.addEventListener("click", () => void this.send())
    this.el.promptInput.addEventListener("keydown", (event) => {
      if ((event as KeyboardEvent).key === "Enter") void this.send()
    })
    this.el.sendButton.disabled = true
  }
}

export function bootstrap(doc: Document = document, api = new ApiClient("")): App {
  const app = new App(api, grab(doc))
  app.wire()
  return app
}

declare global {
  interface Window {
    __preplineApp?: App
  }
}

if (typeof window !== "undefined" && typeof document !== "undefined" && document.getElementById("app")) {
  window.__preplineApp = bootstrap()
}
