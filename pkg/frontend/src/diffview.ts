// Two-version diff rendered as +/- line markers.

import type { DiffChange } from "./api.js"

export function renderDiff(container: HTMLElement, changes: DiffChange[]): void {
  container.replaceChildren()
  if (changes.length === 0) {
    const empty = document.createElement("div")
    empty.className = "diff-empty"
    empty.textContent = "no changes"
    container.appendChild(empty)
    return
  }
  for (const change of changes) {
    const row = document.createElement("div")
    row.className = `diff-line diff-${change.kind}`
    const marker = change.kind === "insert" ? "+" : "-"
    row.textContent = `${marker} ${change.text}`
    container.appendChild(row)
  }
}

export function renderProgram(
  container: HTMLElement, program: string, highlightedLines: Set<number>,
): void {
  container.replaceChildren()
  program.split("\n").forEach((line, index) => {
    const row = document.createElement("div")
    row.className = highlightedLines.has(index) ? "code-line inserted" : "code-line"
    row.textContent = line === "" ? " " : line
    container.appendChild(row)
  })
}
