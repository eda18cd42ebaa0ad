import numpy as np
import pytest

from tweetsumm import salience as sal


def tiny_config(dropout=0.0):
    return sal.NetConfig(freq_dim=3, emb_dim=2, hidden_freq=2, hidden_joint=2, dropout_p=dropout)


def zero_net(config):
    net = sal.SalienceNet(config, seed=0)
    for k in net.params:
        net.params[k][:] = 0.0
    return net


class TestForward:
    def test_all_zero_net_scores_zero(self):
        net = zero_net(tiny_config())
        assert sal.forward(net, [0.2, 0.3, 0.5], [1.0, -1.0]) == 0.0

    def test_bias_only_net(self):
        net = zero_net(tiny_config())
        net.params["W3"][:] = 7.0  # relu(0) kills every path into it
        net.params["b3"][:] = 0.25
        assert sal.forward(net, [0.1, 0.1, 0.8], [2.0, 3.0]) == pytest.approx(0.25)

    def test_hand_computed_matrix_arithmetic(self):
        # widths 3/2/2/1, fixed weights, checked against independent
        # hand matrix arithmetic
        net = zero_net(tiny_config())
        W1 = np.array([[1.0, -1.0], [0.5, 0.5], [0.0, 2.0]])
        b1 = np.array([0.1, -0.2])
        W2 = np.array([[1.0, 0.0], [0.0, 1.0], [2.0, -1.0], [0.5, 0.5]])
        b2 = np.array([0.0, 0.3])
        W3 = np.array([[1.5], [-2.0]])
        b3 = np.array([0.7])
        net.params.update({"W1": W1, "b1": b1, "W2": W2, "b2": b2, "W3": W3, "b3": b3})
        freq = np.array([0.2, 0.3, 0.5])
        emb = np.array([0.4, -0.6])

        h1 = np.maximum(W1.T @ freq + b1, 0.0)
        x = np.concatenate([emb, h1])
        h2 = np.maximum(W2.T @ x + b2, 0.0)
        expected = float((W3.T @ h2 + b3)[0])
        assert sal.forward(net, freq, emb) == pytest.approx(expected, abs=1e-12)

    def test_non_finite_fatal(self):
        net = zero_net(tiny_config())
        net.params["b3"][:] = np.inf
        with pytest.raises(sal.NumericError):
            sal.forward(net, [0.0, 0.0, 0.0], [0.0, 0.0])


class TestLoss:
    @pytest.mark.parametrize("s,t,expected", [(0.5, 0.5, 0.0), (1.0, 0.0, 1.0), (0.3, 0.7, 0.16)])
    def test_values(self, s, t, expected):
        assert sal.loss(s, t) == pytest.approx(expected)


def finite_difference_grads(net, freq, emb, targets, h=1e-5):
    grads = {}
    for name, p in net.params.items():
        g = np.zeros_like(p)
        it = np.nditer(p, flags=["multi_index"])
        for _ in it:
            idx = it.multi_index
            orig = p[idx]
            p[idx] = orig + h
            up = sal.grad(net, freq, emb, targets)[1]
            p[idx] = orig - h
            down = sal.grad(net, freq, emb, targets)[1]
            p[idx] = orig
            g[idx] = (up - down) / (2 * h)
        grads[name] = g
    return grads


class TestGrad:
    def test_zero_residual_zero_grads(self):
        net = zero_net(tiny_config())
        grads, batch_loss = sal.grad(net, [[0.1, 0.2, 0.7]], [[1.0, 2.0]], [0.0])
        assert batch_loss == 0.0
        assert all(not g.any() for g in grads.values())

    def test_zero_net_bias_gradient(self):
        # hand chain rule: score = b3 = 0, d/db3 mean (0 - y)^2 = -2y
        net = zero_net(tiny_config())
        y = 0.8
        grads, _ = sal.grad(net, [[0.1, 0.2, 0.7]], [[1.0, 2.0]], [y])
        assert grads["b3"][0] == pytest.approx(-2 * y)
        assert not grads["W1"].any()
        assert not grads["W2"].any()

    def test_matches_finite_differences(self):
        rng = np.random.default_rng(3)
        net = sal.SalienceNet(tiny_config(), seed=5)
        freq = rng.random((4, 3))
        emb = rng.standard_normal((4, 2))
        targets = rng.random(4)
        analytic, _ = sal.grad(net, freq, emb, targets)
        numeric = finite_difference_grads(net, freq, emb, targets)
        for name in analytic:
            denom = np.maximum(np.abs(numeric[name]), 1e-3)
            rel = np.abs(analytic[name].reshape(numeric[name].shape) - numeric[name]) / denom
            assert rel.max() < 1e-4, name

    def test_dropout_masks_match_forward(self):
        net = sal.SalienceNet(tiny_config(dropout=0.5), seed=2)
        freq = np.array([[0.3, 0.3, 0.4]])
        emb = np.array([[1.0, -0.5]])
        target = np.array([0.4])
        seed = [11, 7]
        score = sal.forward(net, freq[0], emb[0], train_mode=True, rng_seed=seed)
        _, batch_loss = sal.grad(net, freq, emb, target, train_mode=True, rng_seed=seed)
        assert batch_loss == pytest.approx((score - target[0]) ** 2)

    def test_empty_batch_rejected(self):
        net = zero_net(tiny_config())
        with pytest.raises(ValueError):
            sal.grad(net, np.zeros((0, 3)), np.zeros((0, 2)), [])


class TestDropout:
    def test_eval_mode_matches_expectation_on_linear_region(self):
        # all-positive preactivations: eval score should equal the mean of
        # seeded train-mode scores within 2%
        config = tiny_config(dropout=0.5)
        net = sal.SalienceNet(config, seed=1)
        for k in ("W1", "W2", "W3"):
            net.params[k][:] = np.abs(net.params[k]) + 0.1
        net.params["b1"][:] = 0.5
        net.params["b2"][:] = 0.5
        freq = np.array([0.4, 0.3, 0.3])
        emb = np.array([0.5, 0.5])
        eval_score = sal.forward(net, freq, emb)
        train_scores = [
            sal.forward(net, freq, emb, train_mode=True, rng_seed=[99, i])
            for i in range(10_000)
        ]
        assert np.mean(train_scores) == pytest.approx(eval_score, rel=0.02)


class TestAdam:
    def test_first_step_magnitude(self):
        params = {"w": np.array([10.0])}
        state = sal.AdamState(params)
        sal.adam_step(params, {"w": np.array([1.0])}, state, lr=0.1)
        assert params["w"][0] == pytest.approx(10.0 - 0.1 / (1 + 1e-8))
        assert state.t == 1

    def test_zero_gradient_no_move(self):
        params = {"w": np.array([3.0])}
        state = sal.AdamState(params)
        sal.adam_step(params, {"w": np.array([0.0])}, state, lr=0.1)
        assert params["w"][0] == 3.0
        assert state.t == 1

    def test_two_steps_match_hand_recurrence(self):
        # independent hand iteration of the Adam recurrences, g = 0.5
        g, lr, b1, b2, eps = 0.5, 0.01, 0.9, 0.999, 1e-8
        w = 1.0
        m = v = 0.0
        for t in (1, 2):
            m = b1 * m + (1 - b1) * g
            v = b2 * v + (1 - b2) * g * g
            m_hat = m / (1 - b1**t)
            v_hat = v / (1 - b2**t)
            w -= lr * m_hat / (np.sqrt(v_hat) + eps)

        params = {"w": np.array([1.0])}
        state = sal.AdamState(params)
        for _ in range(2):
            sal.adam_step(params, {"w": np.array([g])}, state, lr=lr)
        assert params["w"][0] == pytest.approx(w, abs=1e-10)

    def test_flattening_order_invariance(self):
        rng = np.random.default_rng(8)
        base = {"a": rng.standard_normal(3), "b": rng.standard_normal((2, 2))}
        grads = {"a": rng.standard_normal(3), "b": rng.standard_normal((2, 2))}
        p1 = {k: v.copy() for k, v in base.items()}
        p2 = {k: base[k].copy() for k in reversed(list(base))}
        s1, s2 = sal.AdamState(p1), sal.AdamState(p2)
        for _ in range(3):
            sal.adam_step(p1, grads, s1, lr=0.05)
            sal.adam_step(p2, grads, s2, lr=0.05)
        for k in base:
            np.testing.assert_array_equal(p1[k], p2[k])


class TestNoam:
    def test_knee_point(self):
        d, w = 818, 4000
        assert sal.noam_lr(w, d, w) == pytest.approx(d**-0.5 * w**-0.5)

    def test_step_one(self):
        assert sal.noam_lr(1, 818, 4000) == pytest.approx(818**-0.5 * 4000**-1.5)

    def test_decay_ratio(self):
        assert sal.noam_lr(8000, 818, 4000) / sal.noam_lr(4000, 818, 4000) == pytest.approx(2**-0.5)

    def test_step_zero_rejected(self):
        with pytest.raises(ValueError):
            sal.noam_lr(0)


def make_dataset(n, target=0.5, seed=0):
    rng = np.random.default_rng(seed)
    return [
        sal.TrainingExample(
            freq=rng.random(3), emb=rng.standard_normal(2), target=target, tweet_id=i
        )
        for i in range(n)
    ]


class TestTrain:
    def config(self, epochs=5, dropout=0.0, **kw):
        return sal.TrainConfig(
            epochs=epochs,
            batch_size=16,
            seed=1,
            d_model=4,
            warmup=10,
            net=tiny_config(dropout),
            **kw,
        )

    def test_constant_target_converges(self):
        data = make_dataset(200, target=0.5)
        net, history = sal.train(data, self.config(epochs=8))
        assert history[-1]["val_loss"] < history[0]["val_loss"]
        # closed-form optimum of constant-target MSE is the constant
        preds = sal.forward_many(
            net,
            np.stack([d.freq for d in data]),
            np.stack([d.emb for d in data]),
        )
        assert abs(float(np.mean(preds)) - 0.5) < 0.1

    def test_same_seed_bitwise_identical(self):
        data = make_dataset(100, target=0.3)
        net_a, _ = sal.train(data, self.config(epochs=3, dropout=0.5))
        net_b, _ = sal.train(data, self.config(epochs=3, dropout=0.5))
        for k in net_a.params:
            np.testing.assert_array_equal(net_a.params[k], net_b.params[k])

    def test_zero_epochs_returns_initial(self):
        data = make_dataset(50)
        cfg = self.config(epochs=0)
        net, history = sal.train(data, cfg)
        init = sal.SalienceNet(cfg.net, seed=cfg.seed)
        assert history == []
        for k in net.params:
            np.testing.assert_array_equal(net.params[k], init.params[k])

    def test_small_dataset_single_batch_warns(self, caplog):
        data = make_dataset(5)
        with caplog.at_level("WARNING"):
            sal.train(data, self.config(epochs=1))
        assert any("smaller than batch" in r.message for r in caplog.records)

    def test_empty_dataset_rejected(self):
        with pytest.raises(ValueError):
            sal.train([], self.config())


class TestCrossValidate:
    def test_equal_events_one_per_fold(self):
        packing = sal.pack_folds({"a": 10, "b": 10, "c": 10}, 3)
        assert sorted(len(f) for f in packing) == [1, 1, 1]

    def test_greedy_packing_loads(self):
        # derived by simulating largest-first-into-lightest packing
        sizes = {"a": 10, "b": 9, "c": 9, "d": 1, "e": 1}
        packing = sal.pack_folds(sizes, 3)
        loads = sorted(sum(sizes[e] for e in fold) for fold in packing)
        assert loads == [10, 10, 10]

    def test_too_few_events_fatal(self):
        with pytest.raises(ValueError):
            sal.pack_folds({"a": 5, "b": 5}, 3)

    def test_partition_and_predictions(self):
        events = {
            name: make_dataset(30, target=0.4, seed=i)
            for i, name in enumerate(["a", "b", "c", "d"])
        }
        for name, exs in events.items():
            for ex in exs:
                ex.event_id = name
        cfg = sal.TrainConfig(
            epochs=1, batch_size=16, seed=0, d_model=4, warmup=10, net=tiny_config()
        )
        nets, predictions, assignment = sal.cross_validate(events, 3, cfg)
        held_out = [e for fold in assignment for e in fold]
        assert sorted(held_out) == sorted(events)  # each event in exactly one fold
        assert len(nets) == 3
        assert set(predictions) == set(events)
        for name, preds in predictions.items():
            assert len(preds) == len(events[name])


class TestCheckpoint:
    def test_round_trip(self, tmp_path):
        net = sal.SalienceNet(tiny_config(dropout=0.5), seed=9)
        state = sal.AdamState(net.params)
        sal.adam_step(net.params, {k: np.ones_like(v) for k, v in net.params.items()}, state, 0.01)
        path = tmp_path / "model.tsn"
        sal.save_net(path, net, state)
        assert path.read_bytes()[:4] == b"TSN1"
        loaded, loaded_state = sal.load_net(path)
        assert loaded.config.freq_dim == 3
        assert loaded.config.emb_dim == 2
        for k in net.params:
            np.testing.assert_allclose(loaded.params[k], net.params[k], atol=1e-6)
        assert loaded_state.t == 1
        np.testing.assert_allclose(loaded_state.m["W1"], state.m["W1"], atol=1e-6)

    def test_no_adam_section(self, tmp_path):
        net = sal.SalienceNet(tiny_config(), seed=0)
        path = tmp_path / "model.tsn"
        sal.save_net(path, net)
        _, state = sal.load_net(path)
        assert state is None
