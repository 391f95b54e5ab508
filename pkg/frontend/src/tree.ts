// Clickable version tree. Click a node to roll the session back;
// shift-click selects two nodes to diff.

import type { VersionInfo } from "./api.js"
import { layoutTree } from "./state.js"

const SVG_NS = "http://www.w3.org/2000/svg"
const X_STEP = 78
const Y_STEP = 42
const RADIUS = 13

export interface TreeHandlers {
  onSelect: (id: number) => void
  onDiffSelect: (id: number) => void
}

export function renderTree(
  svg: SVGSVGElement,
  versions: VersionInfo[],
  currentId: number | null,
  diffSelection: number[],
  handlers: TreeHandlers,
): void {
  svg.replaceChildren()
  const nodes = layoutTree(versions)
  if (nodes.length === 0) return
  const maxDepth = Math.max(...nodes.map((n) => n.depth))
  const width = Math.max(240, (maxDepth + 1) * X_STEP + 40)
  const height = nodes.length * Y_STEP + 24
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`)

  const place = new Map(nodes.map((n) => [n.version.id, n]))
  const cx = (n: { depth: number }) => 26 + n.depth * X_STEP
  const cy = (n: { row: number }) => 22 + n.row * Y_STEP

  for (const node of nodes) {
    if (node.version.parent_id === null) continue
    const parent = place.get(node.version.parent_id)
    if (!parent) continue
    const edge = document.createElementNS(SVG_NS, "path")
    edge.setAttribute(
      "d",
      `M ${cx(parent)} ${cy(parent)} C ${cx(parent) + 30} ${cy(parent)}, ` +
        `${cx(node) - 30} ${cy(node)}, ${cx(node)} ${cy(node)}`,
    )
    edge.setAttribute("class", "tree-edge")
    svg.appendChild(edge)
  }

  for (const node of nodes) {
    const group = document.createElementNS(SVG_NS, "g")
    group.setAttribute("class", "tree-node")
    group.dataset.versionId = String(node.version.id)
    if (node.version.id === currentId) group.classList.add("current")
    if (diffSelection.includes(node.version.id)) group.classList.add("diff-selected")

    const circle = document.createElementNS(SVG_NS, "circle")
    circle.setAttribute("cx", String(cx(node)))
    circle.setAttribute("cy", String(cy(node)))
    circle.setAttribute("r", String(RADIUS))
    group.appendChild(circle)

    const label = document.createElementNS(SVG_NS, "text")
    label.setAttribute("x", String(cx(node)))
    label.setAttribute("y", String(cy(node) + 4))
    label.setAttribute("text-anchor", "middle")
    label.textContent = `v${node.version.id}`
    group.appendChild(label)

    const metric = node.version.metric
    const tip = document.createElementNS(SVG_NS, "title")
    tip.textContent =
      metric === null ? `v${node.version.id}` : `v${node.version.id}: ${metric.toFixed(4)}`
    group.appendChild(tip)

    group.addEventListener("click", (event) => {
      if ((event as MouseEvent).shiftKey) handlers.onDiffSelect(node.version.id)
      else handlers.onSelect(node.version.id)
    })
    svg.appendChild(group)
  }
}
