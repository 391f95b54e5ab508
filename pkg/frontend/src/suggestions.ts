// Slash-triggered suggestion bubbles: typing "/" in the prompt box
// fetches ranked recommendations; picking one fills the input, and the
// user may append refinement text before sending.

import type { Recommendation } from "./api.js"

export function slashTriggered(inputValue: string): boolean {
  return inputValue.trimStart().startsWith("/")
}

export function renderBubbles(
  container: HTMLElement,
  recommendations: Recommendation[],
  onPick: (rec: Recommendation) => void,
): void {
  container.replaceChildren()
  for (const rec of recommendations) {
    const bubble = document.createElement("button")
    bubble.type = "button"
    bubble.className = `bubble bubble-${rec.kind}`
    bubble.dataset.name = rec.name
    bubble.dataset.prompt = rec.prompt
    bubble.title = `${rec.kind} · score ${rec.score.toFixed(3)}`
    bubble.textContent = rec.name
    bubble.addEventListener("click", () => onPick(rec))
    container.appendChild(bubble)
  }
  container.classList.toggle("visible", recommendations.length > 0)
}

export function fillPrompt(input: HTMLInputElement | HTMLTextAreaElement, rec: Recommendation): void {
  input.value = rec.prompt
  input.focus()
}

export function clearBubbles(container: HTMLElement): void {
  container.replaceChildren()
  container.classList.remove("visible")
}
