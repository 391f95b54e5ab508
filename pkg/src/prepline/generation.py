"""Program generation backends and the execute-check-repair loop.

Three interchangeable backends produce program text from a prompt:

* ``template`` - deterministic: the prompt is resolved back to a
  catalog operation (fine prompts by template match, coarse prompts to
  the family's canonical default op) and spliced into the base program.
* ``remote`` - a minimal chat-completion HTTP client
  (POST {base_url}/chat/completions); the first fenced code block of
  the reply is the new program, or the whole reply if none.
* ``scripted_mock`` - pops canned replies from a queue; used in tests.

``generate_checked`` executes each candidate and, on failure, feeds the
executor's error message back verbatim as the next prompt, stopping at
max_retries (the template backend never retries).
"""

from __future__ import annotations

import json
import os
import re
from dataclasses import dataclass, field

from . import ops
from .errors import PreplineError, RemoteError, RepairExhausted, UnknownPrompt
from .executor import ExecResult
from .ops import Prompt
from .script import ScriptSource, default_target_var, insert_call, parse

DEFAULT_API_KEY_ENV = "PREPLINE_API_KEY"

_FENCE_RE = re.compile(r"```[^\n`]*\n(.*?)```", re.DOTALL)


def extract_program(reply_text: str) -> ScriptSource:
    """First triple-backtick fenced block, else the whole reply."""
    match = _FENCE_RE.search(reply_text)
    body = match.group(1) if match else reply_text
    return ScriptSource(body.strip("\n"))


def _template_pattern(op: ops.PhysicalOperation):
    pattern = re.escape(op.prompt_template)
    pattern = re.sub(r"\\\{\w+\\\}", "(.+?)", pattern)
    return re.compile(r"^" + pattern + r"(?:\s.*)?$", re.DOTALL)


def _placeholder_names(template):
    return re.findall(r"\{(\w+)\}", template)


class TemplateBackend:
    """Resolves prompts to catalog calls; total on catalog prompts."""

    variant = "template"

    def __init__(self):
        self._patterns = sorted(
            ((op, _template_pattern(op)) for op in ops.all_ops()),
            key=lambda pair: -len(pair[0].prompt_template),
        )

    def _coerce(self, op, name, text):
        default = op.defaults().get(name)
        if default is None:
            return None
        text = text.strip()
        if isinstance(default, bool):
            return None
        if isinstance(default, int):
            try:
                return int(text)
            except ValueError:
                return None
        if isinstance(default, float):
            try:
                return float(text)
            except ValueError:
                return None
        if isinstance(default, str):
            return text
        return None

    def resolve(self, prompt: Prompt):
        """Map prompt text to (operation, kwargs overrides)."""
        text = prompt.text.strip()
        for fam_id, family in ops.FAMILIES.items():
            coarse = family.coarse_prompt
            if text == coarse or text.startswith(coarse + " "):
                return ops.OPS_BY_NAME[ops.FAMILY_DEFAULT_OP[fam_id]], {}
        for op, pattern in self._patterns:
            match = pattern.match(text)
            if match is None:
                continue
            overrides = {}
            names = _placeholder_names(op.prompt_template)
            for name, captured in zip(names, match.groups()):
                value = self._coerce(op, name, captured)
                if value is not None and value != op.defaults().get(name):
                    overrides[name] = value
            return op, overrides
        raise UnknownPrompt(f"cannot resolve prompt {text!r} to a catalog operation")

    def generate(self, base: ScriptSource, prompt: Prompt) -> ScriptSource:
        op, overrides = self.resolve(prompt)
        target = default_target_var(parse(base))
        if target is None:
            from .errors import NoEvalNode

            raise NoEvalNode("base program has no train_eval statement")
        return insert_call(base, op.name, target, overrides)


def _system_prompt(base: ScriptSource):
    lines = [
        "You write PrepScript data-preparation programs.",
        "Grammar: one statement per line, `name = op(args)`; args are",
        "literals (numbers, strings, [lists]) or variable names; keyword",
        "arguments are `name=literal`. Comments start with #. No control flow.",
        "Available operations:",
    ]
    for family, members in ops.catalog():
        names = ", ".join(
            f"{m.name}({', '.join(k for k, _ in m.params)})" for m in members
        )
        lines.append(f"  {family.id}: {names}")
    lines.append("Plumbing: load_csv(path), drop_column(d, name), get_column(d, name),")
    lines.append("train_eval(X, y, metric=..., test_ratio=..., seed=...).")
    lines.append("Current program:")
    lines.append("```")
    lines.append(base.text)
    lines.append("```")
    lines.append("Reply with the complete updated program in a fenced code block.")
    return "\n".join(lines)


class RemoteBackend:
    """Minimal chat-completion wire format client."""

    variant = "remote"

    def __init__(self, base_url, model, api_key_env=DEFAULT_API_KEY_ENV, timeout=30.0):
        self.base_url = base_url.rstrip("/")
        self.model = model
        self.api_key_env = api_key_env
        self.timeout = timeout

    def generate(self, base: ScriptSource, prompt: Prompt) -> ScriptSource:
        import requests

        headers = {"Content-Type": "application/json"}
        key = os.environ.get(self.api_key_env)
        if key:
            headers["Authorization"] = f"Bearer {key}"
        payload = {
            "model": self.model,
            "messages": [
                {"role": "system", "content": _system_prompt(base)},
                {"role": "user", "content": prompt.text},
            ],
        }
        try:
            response = requests.post(
                f"{self.base_url}/chat/completions",
                json=payload,
                headers=headers,
                timeout=self.timeout,
            )
            response.raise_for_status()
            body = response.json()
            content = body["choices"][0]["message"]["content"]
        except requests.RequestException as exc:
            raise RemoteError(f"chat-completion request failed: {exc}") from exc
        except (KeyError, IndexError, TypeError, ValueError) as exc:
            raise RemoteError(f"malformed chat-completion reply: {exc}") from exc
        return extract_program(content)


class ScriptedMockBackend:
    """Pops canned replies in order; raises RemoteError when drained."""

    variant = "scripted_mock"

    def __init__(self, replies):
        self.replies = list(replies)
        self.requests = []

    @staticmethod
    def from_json_file(path):
        with open(path, "r", encoding="utf-8") as fh:
            replies = json.load(fh)
        if not isinstance(replies, list):
            raise RemoteError(f"{path} must hold a JSON list of replies")
        return ScriptedMockBackend(replies)

    def generate(self, base: ScriptSource, prompt: Prompt) -> ScriptSource:
        self.requests.append((base.text, prompt))
        if not self.replies:
            raise RemoteError("scripted reply queue is empty")
        return extract_program(self.replies.pop(0))


def generate(base, prompt: Prompt, backend) -> ScriptSource:
    """One backend call; no execution, no retries."""
    if isinstance(base, str):
        base = ScriptSource(base)
    return backend.generate(base, prompt)


@dataclass
class Attempt:
    prompt: Prompt
    program: ScriptSource
    result: ExecResult


@dataclass
class GenOutcome:
    final_program: ScriptSource
    attempts: list = field(default_factory=list)

    @property
    def repaired(self):
        return len(self.attempts) > 1

    @property
    def final_result(self):
        return self.attempts[-1].result


def generate_checked(base, prompt: Prompt, backend, executor, max_retries=3) -> GenOutcome:
    """Generate, execute, and repair until error-free or retries exhausted.

    The repair prompt is exactly the executor's error message.  Parse
    failures of generated programs count as execution errors too.
    """
    if isinstance(base, str):
        base = ScriptSource(base)
    attempts = []
    current = prompt
    budget = 1 if backend.variant == "template" else max_retries + 1
    for _ in range(budget):
        program = backend.generate(base, current)
        try:
            graph = parse(program)
        except PreplineError as exc:
            result = ExecResult(status="error", error_message=exc.render())
        else:
            result = executor.run(graph)
        attempts.append(Attempt(prompt=current, program=program, result=result))
        if result.ok:
            return GenOutcome(final_program=program, attempts=attempts)
        current = Prompt(text=result.error_message, kind="error_feedback")
    raise RepairExhausted(
        f"no error-free program after {len(attempts)} attempts "
        f"(last error: {attempts[-1].result.error_message})",
        attempts=attempts,
    )


def make_backend(config):
    """Backend from a config mapping with key ``backend``."""
    variant = config.get("backend", "template")
    if variant == "template":
        return TemplateBackend()
    if variant == "remote":
        return RemoteBackend(
            base_url=config.get("remote_base_url", "http://localhost:8080/v1"),
            model=config.get("remote_model", "default"),
            api_key_env=config.get("api_key_env", DEFAULT_API_KEY_ENV),
            timeout=float(config.get("remote_timeout", 30.0)),
        )
    if variant == "scripted_mock":
        path = config.get("scripted_replies")
        if path:
            return ScriptedMockBackend.from_json_file(path)
        return ScriptedMockBackend([])
    raise ValueError(f"unknown backend variant {variant!r}")
