from .embeddings import EmbeddingMatrix, doc_matrix, doc_vector, load_embeddings, write_embeddings
from .layers import LayerFeatures, LayerStrategy, load_layer_features, select_layers
from .skipgram import SkipGramConfig, sgns_pair_loss_grad, train_skipgram
from .tfidf import TfIdfTable, compute_tfidf, tfidf_vectors
from .vocab import Vocabulary, build_vocab

__all__ = [
    "EmbeddingMatrix", "doc_matrix", "doc_vector", "load_embeddings", "write_embeddings",
    "LayerFeatures", "LayerStrategy", "load_layer_features", "select_layers",
    "SkipGramConfig", "sgns_pair_loss_grad", "train_skipgram",
    "TfIdfTable", "compute_tfidf", "tfidf_vectors", "Vocabulary", "build_vocab",
]
