import { describe, expect, it } from "vitest"

import type { VersionInfo } from "../src/api.js"
import {
  emptyState,
  layoutTree,
  metricSeries,
  toggleDiffSelection,
  versionById,
  withTree,
} from "../src/state.js"

const v = (id: number, parent: number | null, metric: number | null = 0.5): VersionInfo => ({
  id,
  parent_id: parent,
  program: `# v${id}`,
  prompt: null,
  metric,
  created_at: 0,
})

describe("withTree", () => {
  it("sorts versions by id and records the current pointer", () => {
    const state = withTree(emptyState(), [v(3, 1), v(1, null), v(2, 1)], 2)
    expect(state.versions.map((x) => x.id)).toEqual([1, 2, 3])
    expect(state.currentId).toBe(2)
    expect(versionById(state, 3)?.parent_id).toBe(1)
  })
})

describe("metricSeries", () => {
  it("has one point per committed version with a metric", () => {
    const state = withTree(emptyState(), [v(1, null, 0.4), v(2, 1, 0.6)], 2)
    expect(metricSeries(state)).toEqual([
      { id: 1, metric: 0.4 },
      { id: 2, metric: 0.6 },
    ])
  })

  it("never fabricates points for metric-less versions", () => {
    const state = withTree(emptyState(), [v(1, null, 0.4), v(2, 1, null)], 2)
    expect(metricSeries(state)).toHaveLength(1)
  })
})

describe("toggleDiffSelection", () => {
  it("toggles and keeps at most two selections", () => {
    let state = emptyState()
    state = toggleDiffSelection(state, 1)
    state = toggleDiffSelection(state, 2)
    expect(state.diffSelection).toEqual([1, 2])
    state = toggleDiffSelection(state, 3)
    expect(state.diffSelection).toEqual([2, 3])
    state = toggleDiffSelection(state, 2)
    expect(state.diffSelection).toEqual([3])
  })
})

describe("layoutTree", () => {
  it("computes depth from parent links and one row per node", () => {
    const nodes = layoutTree([v(1, null), v(2, 1), v(3, 1), v(4, 3)])
    const byId = new Map(nodes.map((n) => [n.version.id, n]))
    expect(byId.get(1)?.depth).toBe(0)
    expect(byId.get(2)?.depth).toBe(1)
    expect(byId.get(3)?.depth).toBe(1)
    expect(byId.get(4)?.depth).toBe(2)
    expect(new Set(nodes.map((n) => n.row)).size).toBe(4)
  })

  it("handles the empty tree", () => {
    expect(layoutTree([])).toEqual([])
  })
})
