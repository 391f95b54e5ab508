"""Error hierarchy shared across the engine.

Every error renders as ``<Kind>: <detail>`` plus ``at line <n>`` when a
source line is known.  The rendered form is a stable contract: the repair
loop feeds it back to the code-generation backend verbatim.
"""


class PreplineError(Exception):
    kind = "Error"

    def __init__(self, detail, line=None):
        self.detail = str(detail)
        self.line = line
        super().__init__(self.render())

    def render(self):
        msg = f"{self.kind}: {self.detail}"
        if self.line is not None:
            msg += f" at line {self.line}"
        return msg

    def __str__(self):
        return self.render()


class IoError(PreplineError):
    kind = "IoError"


class FormatError(PreplineError):
    kind = "FormatError"


class DegenerateSplit(PreplineError):
    kind = "DegenerateSplit"


class ScriptSyntaxError(PreplineError):
    kind = "SyntaxError"


class UndefinedVariable(PreplineError):
    kind = "UndefinedVariable"


class NoEvalNode(PreplineError):
    kind = "NoEvalNode"


class BadParam(PreplineError):
    kind = "BadParam"


class EmptyResult(PreplineError):
    kind = "EmptyResult"


class UndefinedOperation(PreplineError):
    kind = "UndefinedOperation"


class UnimputedMissing(PreplineError):
    kind = "UnimputedMissing"


class NonBinaryLabel(PreplineError):
    kind = "NonBinaryLabel"


class DimensionMismatch(PreplineError):
    kind = "DimensionMismatch"


class EmptyCorpus(PreplineError):
    kind = "EmptyCorpus"


class UnknownPrompt(PreplineError):
    kind = "UnknownPrompt"


class RemoteError(PreplineError):
    kind = "RemoteError"


class RepairExhausted(PreplineError):
    kind = "RepairExhausted"

    def __init__(self, detail, attempts):
        self.attempts = attempts
        super().__init__(detail)


class UnknownParent(PreplineError):
    kind = "UnknownParent"


class UnknownVersion(PreplineError):
    kind = "UnknownVersion"


class StorageError(PreplineError):
    kind = "StorageError"


class DegenerateLabels(PreplineError):
    kind = "DegenerateLabels"


class Infeasible(PreplineError):
    kind = "Infeasible"
