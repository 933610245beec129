import numpy as np
import pytest

from baseline_scope.context import ContextWindow
from baseline_scope.mma import HashEmbedder, MmaModel, gradcheck, toy_config
from baseline_scope.mma.model import EncodedExample


def toy_example(config, seed=0, label=1):
    embedder = HashEmbedder(dimension=config.context_dim, layer_count=config.layer_count,
                            seed=seed)
    rows = [("we", "compare", "against", "strong", "baselines"),
            ("results", "are", "reported", "in", "tables")]
    window = ContextWindow(sentences=tuple(rows), mask=np.ones((2, 5), dtype=bool),
                           citation_row=0)
    rng = np.random.default_rng(seed)
    return EncodedExample(
        paper_id="p", ref_id="r",
        features=np.clip(np.abs(rng.normal(size=52)), 0, 1),
        context_embed=embedder.token_embed(window), context_mask=window.mask.copy(),
        citation_row=0,
        pair_states=embedder.encode_pair(("a", "title", "and", "abstract"),
                                         ("the", "citation", "sentence")),
        label_index=label)


class TestGradcheck:
    def test_strided_sweep_under_tolerance(self):
        config = toy_config(seed=5)
        model = MmaModel(config)
        errors = gradcheck(model, toy_example(config), stride=5)
        assert errors["overall"] < 1e-4, errors
        assert errors["classifier_head"] < 1e-6

    def test_covers_every_parameter_group(self):
        config = toy_config(seed=1)
        model = MmaModel(config)
        errors = gradcheck(model, toy_example(config), stride=29)
        expected = {"word_attention", "sentence_attention", "bilstm", "context_projection",
                    "layer_attention", "pair_encoder", "pair_projection", "feature_linear",
                    "feature_attention", "feature_projection", "module_attention",
                    "classifier_head", "overall"}
        assert set(errors) == expected

    def test_multi_layer_encoder_gradients(self):
        config = toy_config(seed=3, encoder_layers=2, encoder_heads=4)
        model = MmaModel(config)
        errors = gradcheck(model, toy_example(config, seed=3), stride=11)
        assert errors["pair_encoder"] < 1e-4, errors["pair_encoder"]
        assert errors["overall"] < 1e-4

    def test_features_only_example_checks_feature_path(self):
        config = toy_config(seed=2)
        model = MmaModel(config)
        example = EncodedExample(paper_id="p", ref_id="r",
                                 features=np.linspace(0, 1, 52), label_index=0,
                                 features_only=True)
        errors = gradcheck(model, example, stride=3)
        assert errors["feature_linear"] < 1e-4
        assert errors["classifier_head"] < 1e-4
        # text modules never ran: their gradients stay exactly zero
        assert errors["bilstm"] == 0.0 or errors["bilstm"] < 1e-4

    def test_unlabeled_example_rejected(self):
        config = toy_config()
        model = MmaModel(config)
        example = toy_example(config)
        example.label_index = None
        with pytest.raises(ValueError, match="labeled"):
            gradcheck(model, example)
