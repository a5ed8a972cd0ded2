"""Word-synchronized interactive decoding from phoneme-level CTC posteriors."""

from wordsync.ctc import (
    FrameProbs,
    PrefixTable,
    advance_extend,
    advance_stay,
    brute_force_prefix_prob,
    init_prefix_table,
    prefix_prob,
)
from wordsync.decoder import (
    Candidate,
    DecodeConfig,
    DecodeResult,
    InteractionOutcome,
    SearchState,
    auto_accept_gap,
    build_candidates,
    expand_fringe,
    interactive_decode,
    score,
    select_word,
    standard_beam_decode,
)
from wordsync.fst import (
    EPSILON,
    Arc,
    WeightedFst,
    best_path_weight,
    build_lexicon_fst,
    compose_decoder,
    feed_symbol,
)
from wordsync.lm import BigramLm, lm_to_fst, train_bigram_kn
from wordsync.oracle import (
    OracleAction,
    SessionStats,
    aggregate_stats,
    oracle_step,
    rank_histogram,
    run_oracle_session,
    wer,
)
from wordsync.phonemes import ARPABET, BLANK
from wordsync.synth import (
    BenchmarkItem,
    LexiconEntry,
    SynthConfig,
    make_benchmark,
    parse_corpus,
    parse_lexicon,
    synthesize_frame_probs,
)

__version__ = "0.1.0"
