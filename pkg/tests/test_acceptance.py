"""Acceptance criteria, one test per criterion, one pass/fail line each.

Run with ``pytest tests/test_acceptance.py -v -s``. The heavy criteria
(4, 6, 7) build full-size synthetic corpora and run the desk-scale
training twice; expect 10-20 minutes total on two laptop cores with
pinned BLAS threads (see conftest.py).
"""

import time

import numpy as np
import pytest

from plcnoise import nn
from plcnoise.cyclic import csc, csd, direct_csd, exceedance_stats
from plcnoise.features import (
    feature_vector,
    fid,
    pca_fit,
    pca_project,
)
from plcnoise.gan import (
    GanConfig,
    build_model,
    desk_config,
    generate,
    holdout_fid,
    train,
)
from plcnoise.nn.gradcheck import max_rel_error
from plcnoise.report import EvalParams, evaluate_sets, write_report
from plcnoise.rng import Rng
from plcnoise.synth import dataset2_like_config, desk_fresh_config, gen_fresh
from plcnoise.traces import NoiseTrace, TraceSet, normalize_maxabs


def report(criterion, ok, detail):
    print(f"\nACCEPTANCE {criterion}: {'PASS' if ok else 'FAIL'} -- {detail}")
    assert ok, detail


# --- criterion 1: gradient suite ------------------------------------------

LAYER_KINDS = ("conv1d", "conv1d_s4", "dense", "batchnorm", "relu",
               "leaky_relu", "tanh", "upsample", "dense_tanh_dense")


def _kink_safe(model, rng):
    """Push every (leaky) relu pre-activation away from its kink.

    Central differences are undefined across the relu kink, so randomized
    full-network cases pin the units feeding a relu away from zero. In the
    generator every relu sits behind batch norm, whose output is
    gamma * xhat + beta with xhat batch-normalized, so |beta| >> gamma
    bounds the margin regardless of the conv scale (which stays at its
    healthy init: a tiny batch sigma would blow up the FD truncation error
    through the 1/sigma normalization curvature). The critic has no batch
    norm, so its weights shrink and its biases move to +-0.4 instead. The
    per-layer tests cover the kink-side convention itself.
    """
    for _, layer in model.generator._named():
        if isinstance(layer, nn.BatchNorm1d):
            layer.gamma[:] = 0.15
            layer.beta[:] = 0.5 * np.sign(rng.uniform(layer.beta.size))
    for _, layer in model.critic._named():
        layer.params["kernel" if hasattr(layer, "kernel") else "weights"][:] *= 0.2
        layer.bias[:] = 0.4 * np.sign(rng.uniform(layer.bias.size))


def _relu_margin(model, z, x):
    """Smallest |pre-activation| feeding any relu / leaky relu unit."""
    cfg = model.cfg
    margin = np.inf
    h = model.generator.dense.forward(z).reshape(z.shape[0], cfg.base_len,
                                                 cfg.base_ch)
    for conv, bn, act in zip(model.generator.convs, model.generator.bns,
                             model.generator.acts):
        h = conv.forward(nn.upsample(h, 4, cfg.upsample_mode))
        if bn is not None:
            h = bn.forward(h, training=True)
        if act.kind != "tanh":
            margin = min(margin, float(np.abs(h).min()))
        h = act.forward(h)
    h = x
    for conv, act in zip(model.critic.convs, model.critic.acts):
        h = conv.forward(h)
        margin = min(margin, float(np.abs(h).min()))
        h = act.forward(h)
    return margin


def _network_gradcheck_case(seed):
    cfg = GanConfig(latent_dim=5, base_len=4, base_ch=8, blocks=2,
                    kernel_len=5, batch=2, dropout=0.0, sample_rate_hz=1e3)
    model = build_model(cfg, Rng(seed), dtype=np.float64)
    rng = Rng(10_000 + seed)
    _kink_safe(model, rng)

    z = rng.uniform(2 * 5).reshape(2, 5)
    w = rng.uniform(2 * cfg.trace_len).reshape(2, cfg.trace_len, 1)
    x = rng.uniform(2 * cfg.trace_len).reshape(2, cfg.trace_len, 1)
    assert _relu_margin(model, z, x) > 5e-3  # FD probes stay on one side

    def g_loss():
        return float(np.sum(w * model.generator.forward(z, training=True)))

    g_loss()
    gz = model.generator.backward(w)
    params = model.generator.params()
    grads = model.generator.grads()
    keys = sorted(params)
    g_err = max_rel_error(g_loss, [z] + [params[k] for k in keys],
                          [gz] + [grads[k] for k in keys])

    wv = rng.uniform(2)

    def c_loss():
        return float(np.sum(wv * model.critic.forward(x, training=True)))

    c_loss()
    gx = model.critic.backward(wv)
    cparams = model.critic.params()
    cgrads = model.critic.grads()
    ckeys = sorted(cparams)
    c_err = max_rel_error(c_loss, [x] + [cparams[k] for k in ckeys],
                          [gx] + [cgrads[k] for k in ckeys])
    return g_err, c_err


def test_criterion_1_gradient_suite():
    t0 = time.perf_counter()
    layer_worst = {}
    for kind in LAYER_KINDS:
        errs = [nn.gradcheck_layer(kind, Rng(1000 + 7 * i + hash(kind) % 100))
                for i in range(20)]
        layer_worst[kind] = max(errs)
    worst_layer = max(layer_worst.values())

    net_errs = [_network_gradcheck_case(seed) for seed in range(20)]
    worst_g = max(e[0] for e in net_errs)
    worst_c = max(e[1] for e in net_errs)
    elapsed = time.perf_counter() - t0

    ok = worst_layer <= 1e-5 and worst_g <= 1e-4 and worst_c <= 1e-4 and elapsed < 120
    report(1, ok,
           f"layers max {worst_layer:.2e} (<=1e-5), generator {worst_g:.2e} / "
           f"critic {worst_c:.2e} (<=1e-4), 20 cases each, {elapsed:.0f}s (<120s)")


# --- criterion 2: architecture fidelity ------------------------------------

def test_criterion_2_architecture_fidelity():
    cfg = GanConfig()  # defaults = published architecture
    model = build_model(cfg, Rng(1))

    x = np.zeros((1, cfg.latent_dim), dtype=np.float32)
    g_shapes = []
    h = model.generator.dense.forward(x)
    h = h.reshape(1, cfg.base_len, cfg.base_ch)
    g_shapes.append(h.shape[1:])
    for conv, bn, act in zip(model.generator.convs, model.generator.bns,
                             model.generator.acts):
        h = nn.upsample(h, 4, cfg.upsample_mode)
        h = conv.forward(h)
        if bn is not None:
            h = bn.forward(h, training=False)
        h = act.forward(h)
        g_shapes.append(h.shape[1:])
    expected_g = [(16, 1024), (64, 512), (256, 256), (1024, 128),
                  (4096, 64), (16384, 1)]

    d_shapes = []
    for conv, act in zip(model.critic.convs, model.critic.acts):
        h = act.forward(conv.forward(h))
        d_shapes.append(h.shape[1:])
    expected_d = [(4096, 64), (1024, 128), (256, 256), (64, 512), (16, 1024)]
    flat = h.reshape(1, -1)
    score = model.critic.dense.forward(flat)

    ok = (g_shapes == expected_g and d_shapes == expected_d
          and model.critic.dense.weights.shape == (16384, 1)
          and score.shape == (1, 1))
    report(2, ok,
           f"G ladder {g_shapes} == published, D ladder {d_shapes} == published, "
           f"dense 16384->1")


# --- criterion 3: metric oracles -------------------------------------------

def test_criterion_3_metric_oracles():
    fv = feature_vector(NoiseTrace(Rng(5).gaussian(10**6), 400e3))
    moments_ok = (abs(fv.skewness) <= 0.01 and abs(fv.kurtosis - 3) <= 0.05
                  and abs(fv.std_dev - 1) <= 0.005)

    a = Rng(0).gaussian(800).reshape(100, 8)
    ident_ok = fid(a, a) <= 1e-9

    base = Rng(1).gaussian(200).reshape(200, 1)
    base = (base - base.mean(0)) / base.std(0, ddof=1)
    d = 1.7
    shift_ok = abs(fid(base, base + d) - d * d) <= 1e-9

    def whiten(x):
        x = x - x.mean(0)
        return x @ np.linalg.inv(np.linalg.cholesky(np.cov(x, rowvar=False))).T

    w1 = whiten(Rng(2).gaussian(1000).reshape(500, 2))
    w2 = 2.0 * whiten(Rng(3).gaussian(1000).reshape(500, 2))
    w2 = w2 - w2.mean(0)
    cov_ok = abs(fid(w1, w2) - 2.0) <= 1e-8

    feats = Rng(4).gaussian(8000).reshape(1000, 8) * np.arange(1, 9)
    model = pca_fit(feats)
    ortho = np.abs(model.eigenvectors.T @ model.eigenvectors - np.eye(8)).max()
    var_dev = abs(model.eigenvalues.sum() - np.trace(np.cov(feats, rowvar=False)))
    recon = pca_project(model, feats) @ model.eigenvectors.T + model.feature_means
    pca_ok = ortho <= 1e-8 and var_dev <= 1e-8 and np.abs(recon - feats).max() <= 1e-8

    ok = moments_ok and ident_ok and shift_ok and cov_ok and pca_ok
    report(3, ok,
           f"moments(skew {fv.skewness:+.4f}, kurt {fv.kurtosis:.3f}, std "
           f"{fv.std_dev:.4f}), fid(x,x) <= 1e-9, shift d^2 +-1e-9, "
           f"I-vs-4I = 2 +-1e-8, PCA ortho/variance/recon <= 1e-8")


# --- criterion 4: cyclostationarity detection -------------------------------

def test_criterion_4_cyclostationarity_detection():
    t0 = time.perf_counter()
    cfg = dataset2_like_config()  # 122 Hz cycle at 400 kHz
    n_traces, length, nfft = 2048, 16384, 4096
    fresh = gen_fresh(cfg, n_traces, length, Rng(41))
    power = float(fresh.data64().std())
    rng = Rng(42)
    white = TraceSet(np.stack([rng.substream(i).gaussian(length, 0.0, power)
                               for i in range(n_traces)]), cfg.sample_rate_hz)

    exc_f = exceedance_stats(fresh, [122.0], 0.5, (0, 200e3), nfft)
    exc_w = exceedance_stats(white, [122.0], 0.5, (0, 200e3), nfft)
    ratio = exc_f.raw_pct[0] / exc_w.raw_pct[0]

    sp = csc(csd(fresh.trace(0), [0.0, 122.0, 244.0], nfft))
    alpha0_ok = bool(np.all(sp.csc[0][sp.mask[0]] == 1.0))
    bound = float(np.abs(sp.csc).max())
    elapsed = time.perf_counter() - t0

    ok = ratio >= 5.0 and alpha0_ok and bound <= 1 + 1e-6 and elapsed < 600
    report(4, ok,
           f"exceedance@122Hz fresh {exc_f.raw_pct[0]:.1f}% vs white "
           f"{exc_w.raw_pct[0]:.1f}% (ratio {ratio:.2f} >= 5), alpha0 row == 1, "
           f"max|CSC| {bound:.8f} <= 1+1e-6, {elapsed:.0f}s (<600s)")


# --- criterion 5: CSD estimator oracle --------------------------------------

def test_criterion_5_csd_direct_oracle():
    worst = 0.0
    for p in (7, 5):
        fs = 64.0 * p
        n = np.arange(64)
        x = (1 + 0.8 * np.cos(2 * np.pi * n / p)) * np.cos(2 * np.pi * 2 * n / p + 0.7)
        x = x + 0.3 * np.cos(2 * np.pi * 3 * n / p + 0.2)
        tr = NoiseTrace(x, fs)
        fund = fs / p
        sp = csd(tr, [0.0, fund], 16)
        _, direct = direct_csd(tr, fund, [0.0, fund], 16)
        for i in range(2):
            est, ora = np.abs(sp.csd[i]), np.abs(direct[i])
            dom = est > 0.05 * est.max()
            worst = max(worst, float(np.max(np.abs(est[dom] - ora[dom]) / est[dom])))
    report(5, worst <= 0.05,
           f"segment-averaged vs direct double sum on length-64 periodic traces: "
           f"max relative deviation {worst:.2e} (<= 5%) at alpha in {{0, fundamental}}")


# --- criteria 6 + 7: desk-scale training trend and determinism ---------------

DESK_SEED = 7


def _desk_training_run(tmp_dir):
    cfg = desk_config(epochs=50, batch=64, lr=1e-4, clip_value=0.01,
                      eval_every=5, early_stop_patience=1000)
    data, _ = normalize_maxabs(gen_fresh(desk_fresh_config(), 2048, 1024, Rng(100)))
    model = build_model(cfg, Rng(DESK_SEED))
    initial_fid = holdout_fid(model, data, cfg, Rng(DESK_SEED))
    model, hist = train(model, data, cfg, Rng(DESK_SEED),
                        checkpoint_dir=str(tmp_dir),
                        log_path=tmp_dir / "training_log.csv")
    return cfg, data, model, hist, initial_fid


@pytest.fixture(scope="module")
def desk_run_artifacts(tmp_path_factory):
    out = tmp_path_factory.mktemp("desk_a")
    t0 = time.perf_counter()
    clip_violation = [0.0]
    orig = nn.Adam.step

    def watched(self, grads):
        orig(self, grads)
        if self.clip_value is not None:
            worst = max(float(np.abs(v).max()) for v in self.params.values())
            clip_violation[0] = max(clip_violation[0], worst - self.clip_value)

    nn.Adam.step = watched
    try:
        cfg, data, model, hist, initial_fid = _desk_training_run(out)
    finally:
        nn.Adam.step = orig
    elapsed = time.perf_counter() - t0
    return dict(out=out, cfg=cfg, data=data, model=model, hist=hist,
                initial_fid=initial_fid, elapsed=elapsed,
                clip_violation=clip_violation[0])


def test_criterion_6_desk_scale_training_trend(desk_run_artifacts):
    a = desk_run_artifacts
    fids = [f for f in a["hist"].fid if np.isfinite(f)]
    final_fid = fids[-1]
    ok = (final_fid <= 0.5 * a["initial_fid"]
          and a["clip_violation"] <= 0.0
          and a["elapsed"] <= 1800)
    report(6, ok,
           f"FID {a['initial_fid']:.3g} -> {final_fid:.3g} "
           f"(<= 0.5x initial), critic |w| <= 0.01 after every step "
           f"(max violation {a['clip_violation']:.2e}), 50 epochs on 2048 "
           f"traces in {a['elapsed']:.0f}s (<= 1800s)")


def test_criterion_7_bitwise_determinism(desk_run_artifacts, tmp_path_factory):
    out_b = tmp_path_factory.mktemp("desk_b")
    _desk_training_run(out_b)
    out_a = desk_run_artifacts["out"]

    mismatched = []
    for name in ("epoch_001.ckpt", "epoch_025.ckpt", "epoch_050.ckpt",
                 "best.ckpt"):
        if (out_a / name).read_bytes() != (out_b / name).read_bytes():
            mismatched.append(name)

    # the log's wall-time column varies; every recorded number must not
    def log_values(path):
        rows = path.read_text().strip().splitlines()[1:]
        return [r.rsplit(",", 1)[0] for r in rows]  # epoch,d_loss,g_loss,fid

    if log_values(out_a / "training_log.csv") != log_values(out_b / "training_log.csv"):
        mismatched.append("training_log.csv")

    # reports from the two runs' generated sets are byte-identical too
    params = EvalParams(fundamental_hz=122.0, thresh=0.5, f_range=(0, 10e3),
                        nfft=256, bands=((0, 2e3), (2e3, 4.5e3), (4.5e3, 8e3),
                                         (8e3, 12.5e3)))
    reports = []
    for run_dir, model_dir in (("rep_a", out_a), ("rep_b", out_b)):
        from plcnoise.gan import load_model

        model, _ = load_model(model_dir / "epoch_050.ckpt")
        gen = generate(model, 64, Rng(3))
        rep = evaluate_sets(desk_run_artifacts["data"], gen, params)
        rep_dir = tmp_path_factory.mktemp(run_dir)
        write_report(rep, rep_dir)
        reports.append(b"".join((rep_dir / f).read_bytes()
                                for f in ("features.csv", "exceedance.csv",
                                          "bands.csv", "fid.csv")))
    if reports[0] != reports[1]:
        mismatched.append("report CSVs")

    report(7, not mismatched,
           "two identically seeded single-threaded runs: checkpoints and "
           f"reports byte-identical (mismatches: {mismatched or 'none'})")


# --- criterion 8: report fidelity -------------------------------------------

def test_criterion_8_report_fidelity(tmp_path):
    data, _ = normalize_maxabs(gen_fresh(desk_fresh_config(), 48, 1024, Rng(8)))
    params = EvalParams(fundamental_hz=122.0, thresh=0.5, f_range=(0, 10e3),
                        nfft=256, bands=((0, 2e3), (2e3, 4.5e3), (4.5e3, 8e3),
                                         (8e3, 12.5e3)))
    rep = evaluate_sets(data, data, params)
    files = write_report(rep, tmp_path)

    import csv as _csv

    with open(tmp_path / "features.csv") as fh:
        feats = list(_csv.reader(fh))
    with open(tmp_path / "exceedance.csv") as fh:
        exc = list(_csv.reader(fh))
    structure_ok = (
        feats[0][:5] == ["feature", "name", "ref_mean", "ref_std", "ref_median"]
        and [r[0] for r in feats[1:]] == [f"({i})" for i in range(1, 10)]
        and [r[0] for r in exc[1:]] == ["122", "244", "366", "488", "610",
                                        "732", "Error"]
    )
    degenerate_ok = (rep.fid_value <= 1e-9
                     and rep.exceedance.error == 0.0
                     and rep.band_error == 0.0
                     and np.array_equal(rep.band_pct["reference"],
                                        rep.band_pct["generated"]))
    ok = structure_ok and degenerate_ok and set(files) >= {
        "features.csv", "exceedance.csv", "bands.csv", "fid.csv"}
    report(8, ok,
           f"set-vs-itself: FID {rep.fid_value:.2e} (<=1e-9), exceedance Error "
           f"0%, identical band rows; tables carry feature-id/mean/std/median "
           f"columns and alpha rows 122-732 Hz + Error")
