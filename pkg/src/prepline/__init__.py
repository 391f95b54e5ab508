"""prepline: interactive data-preparation pipeline orchestration.

Parses prep scripts into dataflow DAGs, scores pipelines with a built-in
classifier, recommends next prep operations with a hierarchical DQN,
generates program edits with an error-repair loop, and manages program
versions with semantic diff and cache-accelerated re-execution.
"""

__version__ = "0.1.0"
