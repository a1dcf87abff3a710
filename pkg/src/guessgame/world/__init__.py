from .grammar import (
    END, MAX_LEN, PAD, TEMPLATES, VOCAB, VOCAB_SIZE, GrammarError, Question,
    from_words, generate_question, parse, question_from_ids,
)
from .images import (
    COLORS, DOMAIN_TAGS, FEATURE_DIM, SHAPES, SIZES, Slot, WorldConfig,
    WorldError, WorldImage, describe_image, generate_image, marginal_l1,
    render_features,
)
from .oracle import (
    ANSWER_SIZE, ANSWER_TO_ID, ANSWER_VOCAB, NOT_RELEVANT, NOT_RELEVANT_ID,
    ask_oracle, ask_oracle_id,
)
from .pools import (
    POOL_SIZES, Pool, Stage1Example, sample_contrast_pair, sample_random_pool,
)
from .dataset import (
    build_stage1_dataset, load_examples, read_corpus, save_examples, write_corpus,
)
