"""Exception hierarchy shared by all modules."""


class QRAError(Exception):
    pass


class DomainError(QRAError, ValueError):
    """A measure was asked for a value outside its mathematical domain."""


class BundleSyntaxError(QRAError):
    def __init__(self, message, line=None, column=None):
        self.line = line
        self.column = column
        where = f" (line {line}, column {column})" if line is not None else ""
        super().__init__(f"{message}{where}")


class SchemaError(QRAError):
    def __init__(self, path, message):
        self.path = path
        super().__init__(f"{path}: {message}")


class GateRefusal(QRAError):
    """Raised in strict mode when experiments of a quality criterion differ in properties."""

    def __init__(self, qc, profile, reasons):
        self.qc = qc
        self.profile = profile
        self.reasons = list(reasons)
        super().__init__(f"experiments for {qc!r} are not comparable: " + "; ".join(self.reasons))


class ValidationFailed(QRAError):
    def __init__(self, findings):
        self.findings = list(findings)
        super().__init__(f"{len(self.findings)} validation finding(s): "
                         + "; ".join(map(str, self.findings[:5])))
