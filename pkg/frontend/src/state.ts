// UI session state mirrored from the server. The UI never invents
// state: every field here comes from a confirmed server response.

import type { VersionInfo } from "./api.js"

export interface UiSessionState {
  sessionId: string | null
  versions: VersionInfo[]
  currentId: number | null
  diffSelection: number[]
  pending: boolean
}

export function emptyState(): UiSessionState {
  return { sessionId: null, versions: [], currentId: null, diffSelection: [], pending: false }
}

export function withTree(
  state: UiSessionState, versions: VersionInfo[], currentId: number,
): UiSessionState {
  return { ...state, versions: [...versions].sort((a, b) => a.id - b.id), currentId }
}

export function metricSeries(state: UiSessionState): Array<{ id: number; metric: number }> {
  return state.versions
    .filter((v) => v.metric !== null)
    .map((v) => ({ id: v.id, metric: v.metric as number }))
}

export function versionById(state: UiSessionState, id: number): VersionInfo | undefined {
  return state.versions.find((v) => v.id === id)
}

export function toggleDiffSelection(state: UiSessionState, id: number): UiSessionState {
  let selection = state.diffSelection.includes(id)
    ? state.diffSelection.filter((x) => x !== id)
    : [...state.diffSelection, id]
  if (selection.length > 2) selection = selection.slice(-2)
  return { ...state, diffSelection: selection }
}

export interface TreeNode {
  version: VersionInfo
  depth: number
  row: number
}

// Layered layout: depth is the distance from the root, each node gets
// its own row in id order, so branches render as a readable staircase.
export function layoutTree(versions: VersionInfo[]): TreeNode[] {
  const byId = new Map(versions.map((v) => [v.id, v]))
  const depthOf = (v: VersionInfo): number => {
    let depth = 0
    let cursor = v
    while (cursor.parent_id !== null) {
      const parent = byId.get(cursor.parent_id)
      if (!parent) break
      depth += 1
      cursor = parent
    }
    return depth
  }
  return [...versions]
    .sort((a, b) => a.id - b.id)
    .map((version, row) => ({ version, depth: depthOf(version), row }))
}
