"""
Copyright (c) 2017-2023 Raphael Michel and contributors
Copyright (c) 2026 drnash contributors

Permission is hereby granted, free of charge, to any person obtaining a copy
of this software and associated documentation files (the "Software"), to deal
in the Software without restriction, including without limitation the rights
to use, copy, modify, merge, publish, distribute, sublicense, and/or sell
copies of the Software, and to permit persons to whom the Software is furnished
to do so, subject to the following conditions:

The above copyright notice and this permission notice shall be included in all
copies or substantial portions of the Software.

THE SOFTWARE IS PROVIDED "AS IS", WITHOUT WARRANTY OF ANY KIND, EXPRESS OR
IMPLIED, INCLUDING BUT NOT LIMITED TO THE WARRANTIES OF MERCHANTABILITY,
FITNESS FOR A PARTICULAR PURPOSE AND NONINFRINGEMENT. IN NO EVENT SHALL THE
AUTHORS OR COPYRIGHT HOLDERS BE LIABLE FOR ANY CLAIM, DAMAGES OR OTHER LIABILITY,
WHETHER IN AN ACTION OF CONTRACT, TORT OR OTHERWISE, ARISING FROM, OUT OF OR IN
CONNECTION WITH THE SOFTWARE OR THE USE OR OTHER DEALINGS IN THE SOFTWARE.
"""


class ValidationError(Exception):
    """
    Raised when a scenario (or a value derived from one) breaks one of the
    model's rules.
    @param problems: list of (field, rule) pairs, e.g.
        ("prosumers[0].alpha", "ALPHA_OUT_OF_RANGE")
    """

    def __init__(self, problems, prefix="Scenario did not validate: "):
        if isinstance(problems, str):
            problems = [("", problems)]
        self.problems = list(problems)
        super().__init__(prefix + " ".join(
            "{}: {}".format(field, rule) if field else rule for field, rule in self.problems
        ))


class ScenarioFormatError(ValidationError):
    """
    The scenario file could not be parsed into the documented structure.
    """

    def __init__(self, problems, line=None, column=None):
        self.line = line
        self.column = column
        prefix = "Scenario could not be parsed: "
        if line is not None:
            prefix = "Scenario could not be parsed (line {}, column {}): ".format(line, column)
        super().__init__(problems, prefix=prefix)


class DomainError(ValueError):
    pass


class ProblemList:
    """
    Collects validation problems so that all of them can be reported at once.
    """

    def __init__(self):
        self._problems = []

    def add(self, field, rule):
        self._problems.append((field, rule))

    def __bool__(self):
        return bool(self._problems)

    def __iter__(self):
        return iter(self._problems)

    def raise_if_any(self, error_class=ValidationError):
        if self._problems:
            raise error_class(self._problems)
