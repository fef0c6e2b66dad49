"""Succinct-trie and hash-table indexes for Hamming-range search over
b-bit integer sketches."""

from .base import FormatError, ParamsMixin
from .bitvec import RankSelectBitVector
from .cost import (
    CostEstimate,
    choose_blocks,
    cost_multi,
    cost_single,
    estimate_cost,
    signature_count,
)
from .indexes import (
    HammingQuery,
    LinearScanIndex,
    MultiIndexHashing,
    MultiIndexScratch,
    MultiIndexSketchTrie,
    SingleIndexHashing,
    SketchTrieIndex,
    ThresholdAssignment,
    assign_thresholds,
    enumerate_signatures,
    linear_scan,
)
from .ingest import (
    MinhashParams,
    SyntheticSpec,
    bbit_minhash,
    generate,
    read_sketches,
    read_token_sets,
    sketch_token_sets,
    write_sketches,
)
from .serialize import index_from_bytes, index_to_bytes, load_index, save_index
from .sketches import (
    BlockPartition,
    SketchDataset,
    SketchParams,
    VerticalSketchSet,
    as_dataset,
    hamming_naive,
    hamming_vertical,
    hamming_vertical_bounded,
    partition,
    to_vertical,
    vertical_query,
)
from .trie import (
    BbitSketchTrie,
    LayerPlan,
    LeafIdMap,
    ListLevel,
    PointerTrie,
    SearchScratch,
    SparseLayer,
    TableLevel,
    build_pointer_trie,
    plan_layers,
    pointer_trie_footprint_bytes,
)

__version__ = "0.1.0"
