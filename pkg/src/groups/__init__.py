"""LongJump - Built-in Groups"""

from src.groups.catalog import (
    Layer,
    NilpotentApprox,
    builtin_nilpotent_approx,
    builtin_subgroups,
    coset_decompose,
    get_subgroup,
    standard_generators,
)
from src.groups.elements import (
    Element,
    GroupKind,
    GroupSpec,
    evaluate_word,
    format_element,
    inv,
    mul,
    parse_element,
)
from src.groups.subgroups import SubgroupSpec, intrinsic_word_length, subgroup_coordinates

__all__ = [
    "Element",
    "GroupKind",
    "GroupSpec",
    "Layer",
    "NilpotentApprox",
    "SubgroupSpec",
    "builtin_nilpotent_approx",
    "builtin_subgroups",
    "coset_decompose",
    "evaluate_word",
    "format_element",
    "get_subgroup",
    "intrinsic_word_length",
    "inv",
    "mul",
    "parse_element",
    "standard_generators",
    "subgroup_coordinates",
]
