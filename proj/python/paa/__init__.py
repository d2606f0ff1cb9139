"""Principal amalgamation analysis of compositional data."""

from ._paa import (
    CompositionMatrix,
    MergeTrace,
    ParseError,
    TaxonomyTree,
    cut,
    distance_matrix,
    fit,
    load_composition,
    make_composition,
    parse_lineage_table,
    parse_newick,
    render_dendrogram,
)

__all__ = [
    "CompositionMatrix",
    "MergeTrace",
    "ParseError",
    "TaxonomyTree",
    "cut",
    "distance_matrix",
    "fit",
    "load_composition",
    "make_composition",
    "parse_lineage_table",
    "parse_newick",
    "render_dendrogram",
]
