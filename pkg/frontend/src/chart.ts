// Metric line chart rendered as plain SVG. One point per committed
// version that carries a metric - never a fabricated value.

const SVG_NS = "http://www.w3.org/2000/svg"

export interface ChartPoint {
  id: number
  metric: number
}

export function renderChart(
  svg: SVGSVGElement,
  points: ChartPoint[],
  currentId: number | null = null,
): void {
  svg.replaceChildren()
  const width = 320
  const height = 140
  const pad = 24
  svg.setAttribute("viewBox", `0 0 ${width} ${height}`)
  if (points.length === 0) return

  const xs = (i: number) =>
    points.length === 1 ? width / 2 : pad + (i * (width - 2 * pad)) / (points.length - 1)
  const ys = (m: number) => height - pad - m * (height - 2 * pad)

  const axis = document.createElementNS(SVG_NS, "path")
  axis.setAttribute("d", `M ${pad} ${ys(1)} L ${pad} ${ys(0)} L ${width - pad} ${ys(0)}`)
  axis.setAttribute("class", "chart-axis")
  svg.appendChild(axis)

  if (points.length > 1) {
    const line = document.createElementNS(SVG_NS, "polyline")
    line.setAttribute(
      "points",
      points.map((p, i) => `${xs(i)},${ys(p.metric)}`).join(" "),
    )
    line.setAttribute("class", "chart-line")
    svg.appendChild(line)
  }

  points.forEach((point, i) => {
    const dot = document.createElementNS(SVG_NS, "circle")
    dot.setAttribute("cx", String(xs(i)))
    dot.setAttribute("cy", String(ys(point.metric)))
    dot.setAttribute("r", "3.5")
    dot.setAttribute("class", point.id === currentId ? "chart-dot current" : "chart-dot")
    dot.dataset.versionId = String(point.id)
    const label = document.createElementNS(SVG_NS, "title")
    label.textContent = `v${point.id}: ${point.metric.toFixed(4)}`
    dot.appendChild(label)
    svg.appendChild(dot)
  })
}
