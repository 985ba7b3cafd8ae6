"""Exception types raised by the package."""


class CausalRulesError(ValueError):
    """Base class for user-facing errors."""


class EmptyDataset(CausalRulesError):
    pass


class DuplicateItemName(CausalRulesError):
    def __init__(self, name):
        super().__init__(f"duplicate item name {name!r}")
        self.name = name


class MissingRoleForItem(CausalRulesError):
    def __init__(self, name):
        super().__init__(f"roles file has no entry for item {name!r}")
        self.name = name


class NonBinaryCell(CausalRulesError):
    """A data cell that is not literally ``0`` or ``1``; ``row`` is 1-based, header excluded."""

    def __init__(self, row, col, value=None):
        super().__init__(f"non-binary cell at row {row}, column {col!r}: {value!r}")
        self.row = row
        self.col = col
        self.value = value


class RoleError(CausalRulesError):
    pass


class InvalidItem(CausalRulesError):
    def __init__(self, item):
        super().__init__(f"unknown item {item!r}")
        self.item = item


class OverlappingSets(CausalRulesError):
    def __init__(self, items):
        super().__init__(f"items required both true and false: {items}")
        self.items = items


class CollinearDesign(CausalRulesError):
    pass


class AllReplicatesInestimable(CausalRulesError):
    pass
