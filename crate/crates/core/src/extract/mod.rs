pub mod features;
pub mod glossary;
pub mod index;
pub mod lambdarank;
pub mod ndcg;
pub mod ranker;
pub mod tagging;

pub use features::{features, RankFeatures, NUM_FEATURES};
pub use glossary::{
    load_annotations, load_glossary, merge_annotations, parse_annotations, parse_glossary, EntitySource,
    GlossaryEntry, RankAnnotation,
};
pub use index::{Candidate, EsaIndex, DEFAULT_TOP_N};
pub use lambdarank::{all_pairs, delta_ndcg, lambdarank_loss, predicted_positions, LambdaLoss};
pub use ndcg::{discount, ideal_dcg, ndcg};
pub use ranker::{train_ranker, RankGroup, RankerConfig, RankerModel, RankerReport};
pub use tagging::{
    build_rank_groups, choose_threshold, evaluate_tagging, score_candidates, split_papers, tag, Tag,
    MENTION_KNOWLEDGE, MIN_RECALL,
};
