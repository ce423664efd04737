"""Top-level acceptance suite.

One test per release criterion; each prints a single PASS/FAIL/SKIP line
(visible under pytest -s or in failure output) in addition to the usual
pytest verdict. Tolerances are pinned here and must not be loosened.
"""
import json
import time
from pathlib import Path

import numpy as np
import pytest

from ocds.data import synth
from ocds.inference import classify
from ocds.kernels import KernelSpec, ensure_pd, gram
from ocds.kods import KodsHyper, build_kods_problem, kods_scores_batch, kods_train
from ocds.manifolds import (
    Euclidean,
    GeneralizedStiefel,
    NonCompactStiefel,
    Oblique,
    PositiveVector,
    Product,
    Sphere,
    Stiefel,
    tree_dot,
    tree_map,
)
from ocds.persistence import load_model, save_model
from ocds.primal import (
    VARIANTS,
    GodsHyper,
    build_primal_problem,
    primal_scores_batch,
    train_primal,
)
from ocds.solver import Objective, SolverConfig, fd_gradient_check, minimize

ROOT = Path(__file__).resolve().parent.parent


def _verdict(number, description, body):
    try:
        body()
    except pytest.skip.Exception:
        print(f"criterion {number}: SKIP - {description}")
        raise
    except BaseException:
        print(f"criterion {number}: FAIL - {description}")
        raise
    print(f"criterion {number}: PASS - {description}")


# ---------------------------------------------------------------------------


def test_criterion_1_gradient_correctness():
    def body():
        t0 = time.time()
        rng = np.random.default_rng(0)
        x = rng.standard_normal((12, 5))
        problems = []
        for variant in VARIANTS:
            k = 1 if variant == "bods" else 2
            p = build_primal_problem(x, GodsHyper(variant=variant, k=k, normalize=False))
            problems.append((variant, p.manifold, p.objective))
        xk = rng.standard_normal((8, 3))
        gram_pd, _ = ensure_pd(gram(KernelSpec(family="rbf", sigma=0.8), xk))
        manifold_k, objective_k = build_kods_problem(gram_pd, KodsHyper(k=2))
        problems.append(("kods", manifold_k, objective_k))

        assert len(problems) == 6
        for name, manifold, objective in problems:
            for trial in range(20):
                point = manifold.random_point(1000 + 7 * trial)
                err = fd_gradient_check(objective, point)
                assert err <= 1e-5, f"{name} trial {trial}: fd mismatch {err:.2e}"
        assert time.time() - t0 < 60.0

    _verdict(1, "all six objectives match central finite differences", body)


def test_criterion_2_manifold_invariants():
    def body():
        t0 = time.time()
        rng = np.random.default_rng(3)
        a = rng.standard_normal((6, 6))
        kinds = [
            Euclidean(3, 2),
            Sphere(4),
            Stiefel(5, 2),
            Oblique(4, 3),
            PositiveVector(3),
            NonCompactStiefel(5, 2),
            GeneralizedStiefel(6, 2, a @ a.T / 6 + np.eye(6)),
            Product(Stiefel(4, 2), Euclidean(2)),
        ]
        for man in kinds:
            for seed in range(100):
                p = man.random_point(seed)
                amb_rng = np.random.default_rng(10_000 + seed)
                ambient = tree_map(lambda x: amb_rng.standard_normal(x.shape), p)
                step = man.project_tangent(p, ambient)
                out = man.retract(p, tree_map(lambda t: 0.5 * t, step))
                assert man.feasibility(out) <= 1e-10, (man.name, seed)
                xi = man.egrad_to_rgrad(p, ambient)
                assert man.tangency(p, xi) <= 1e-12, (man.name, seed)

        # identity-gram generalized frames behave exactly like transposed
        # orthonormal frames for every tangent-space operation
        gen = GeneralizedStiefel(5, 2, np.eye(5))
        sti = Stiefel(5, 2)
        for seed in range(25):
            u = gen.random_point(seed)
            g_rng = np.random.default_rng(20_000 + seed)
            g = g_rng.standard_normal((2, 5))
            proj_gap = gen.project_tangent(u, g) - sti.project_tangent(u.T, g.T).T
            grad_gap = gen.egrad_to_rgrad(u, g) - sti.egrad_to_rgrad(u.T, g.T).T
            assert np.abs(proj_gap).max() <= 1e-12
            assert np.abs(grad_gap).max() <= 1e-12
            t = gen.project_tangent(u, g)
            v = gen.retract(u, t)
            w = gen.transport(u, v, t) - sti.transport(u.T, v.T, t.T).T
            assert np.abs(w).max() <= 1e-12
            assert abs(gen.inner(u, t, t) - sti.inner(u.T, t.T, t.T)) <= 1e-12
        assert time.time() - t0 < 30.0

    _verdict(2, "retraction feasibility and gradient tangency hold everywhere", body)


def test_criterion_3_solver_oracle_equivalence():
    def body():
        rng = np.random.default_rng(5)
        a = rng.standard_normal((5, 5))
        a = (a + a.T) / 2.0
        sphere = Sphere(5)
        ray = Objective(cost=lambda w: float(w @ a @ w), egrad=lambda w: 2.0 * (a @ w))
        point, report = minimize(ray, sphere, sphere.random_point(0),
                                 SolverConfig(max_iters=500))
        lam_min = float(np.linalg.eigvalsh(a)[0])
        assert report.iterations <= 500
        assert abs(float(point @ a @ point) - lam_min) <= 1e-6
        trace = report.objective_trace
        assert all(b <= a2 for a2, b in zip(trace, trace[1:]))

        x = np.random.default_rng(6).standard_normal((6, 3))
        b = np.random.default_rng(7).standard_normal((3, 3))
        man = Stiefel(6, 3)
        pro = Objective(
            cost=lambda w: float(np.sum((x - w @ b) ** 2)),
            egrad=lambda w: 2.0 * (w @ b - x) @ b.T,
        )
        point, report = minimize(pro, man, man.random_point(1), SolverConfig(max_iters=500))
        u, _, vt = np.linalg.svd(x @ b.T, full_matrices=False)
        closed = u @ vt
        assert report.iterations <= 500
        assert pro.cost(point) - pro.cost(closed) <= 1e-6
        trace = report.objective_trace
        assert all(b2 <= a2 for a2, b2 in zip(trace, trace[1:]))

    _verdict(3, "solver reproduces eigensolver and closed-form factorizations", body)


def _dual_residuals(model):
    raw = gram(model.kernel, model.support)
    g = raw + model.jitter * np.eye(raw.shape[0])
    y, z = model.duals.y, model.duals.z
    ry = np.linalg.norm(y @ g @ y.T - np.eye(y.shape[0]))
    rz = np.linalg.norm(z @ g @ z.T - np.eye(z.shape[0]))
    return ry, rz


def test_criterion_4_kods_feasibility_after_training():
    def body():
        runs = [
            (synth("ring", 300, seed=0).features,
             KernelSpec(family="rbf", sigma=0.06),
             KodsHyper(k=1, eta=0.3, lam=1.0, normalize=False)),
            (synth("gaussian", 40, seed=1, d=3, mean=1.5, cov=0.2).features,
             KernelSpec(family="rbf", sigma=0.8),
             KodsHyper(k=2)),
            (np.abs(synth("gaussian", 30, seed=2, d=4, mean=1.0, cov=0.3).features),
             KernelSpec(family="polynomial", degree=3),
             KodsHyper(k=3)),
        ]
        for x, kernel, hyper in runs:
            model, _ = kods_train(x, kernel, hyper, seed=0)
            ry, rz = _dual_residuals(model)
            assert ry <= 1e-8, (kernel.family, ry)
            assert rz <= 1e-8, (kernel.family, rz)

    _verdict(4, "trained dual frames stay on their constraint sets", body)


def test_criterion_5_synthetic_ring_reproduction():
    def body():
        t0 = time.time()
        train = synth("ring", 300, seed=0).features
        model, _ = kods_train(
            train,
            KernelSpec(family="rbf", sigma=0.06),
            KodsHyper(k=1, eta=0.3, lam=1.0, normalize=False),
            seed=0,
        )
        held = synth("ring", 100, seed=1).features
        s1, s2 = kods_scores_batch(model, held)
        eta = model.eta_effective
        in_rate = np.mean([classify(a, b, eta) for a, b in zip(s1, s2)])

        hole_rng = np.random.default_rng(2)
        radius = 0.7 * np.sqrt(hole_rng.uniform(size=100))
        theta = hole_rng.uniform(0.0, 2.0 * np.pi, size=100)
        hole = np.column_stack([radius * np.cos(theta), radius * np.sin(theta)])
        s1, s2 = kods_scores_batch(model, hole)
        rej_rate = 1.0 - np.mean([classify(a, b, eta) for a, b in zip(s1, s2)])

        assert in_rate >= 0.90, f"held-out ring acceptance {in_rate:.2f}"
        assert rej_rate >= 0.90, f"inner-hole rejection {rej_rate:.2f}"
        assert time.time() - t0 < 120.0

    _verdict(5, "ring data accepted and hole points rejected at 90 percent", body)


BANDS = {
    "banknote": ("floor", 0.90),
    "scale": ("floor", 0.85),
    "pump": ("window", 0.876, 0.05),
    "sonar": ("window", 0.716, 0.08),
    "survival": ("window", 0.876, 0.06),
}


def test_criterion_6_uci_desk_scale_reproduction():
    def body():
        config_dir = ROOT / "bench" / "uci"
        configs = sorted(config_dir.glob("*.json")) if config_dir.is_dir() else []
        available = []
        for cfg_path in configs:
            doc = json.loads(cfg_path.read_text())
            csv = cfg_path.parent / doc["csv"]
            if csv.exists():
                available.append((cfg_path.stem, doc, csv))
        if not available:
            pytest.skip(
                "UCI benchmark CSVs not present; download them and place the "
                "files under bench/uci/data/ as described in bench/uci/README.md"
            )

        from ocds.cli import _bench_one, _kernel_from_config
        from ocds.data import load_csv

        for name, doc, csv in available:
            ds = load_csv(csv, label_column=doc["label_column"],
                          delimiter=doc.get("delimiter", ","),
                          has_header=doc.get("has_header", False))
            gods_f1, kods_f1 = _bench_one(ds, str(doc["target"]), 5,
                                          _kernel_from_config(doc))
            g, k = gods_f1.mean(), kods_f1.mean()
            band = BANDS[name]
            if band[0] == "floor":
                assert g >= band[1], f"{name}: gods F1 {g:.3f} below {band[1]}"
            else:
                assert abs(g - band[1]) <= band[2], f"{name}: gods F1 {g:.3f}"
            assert k >= g - 0.03, f"{name}: kods F1 {k:.3f} vs gods {g:.3f}"

    _verdict(6, "UCI one-class scores land in the published bands", body)


def test_criterion_7_margin_monotonicity():
    def body():
        x = synth("gaussian", 100, seed=0, d=2, mean=2.0, cov=0.25).features
        model, _ = train_primal(x, GodsHyper(variant="gods", k=2, nu=20.0), seed=0)
        s1, s2 = primal_scores_batch(model, x)
        counts = [
            int(sum(classify(a, b, margin) for a, b in zip(s1, s2)))
            for margin in (0.1, 0.2, 0.3, 0.4, 0.5)
        ]
        assert all(later <= earlier for earlier, later in zip(counts, counts[1:])), counts
        assert counts[0] > counts[-1], counts

    _verdict(7, "raising the margin never admits more points", body)


def test_criterion_8_video_scale_results_excluded():
    def body():
        readme = (ROOT / "README.md").read_text().lower()
        assert "video" in readme
        assert "out of scope" in readme or "excluded" in readme

    _verdict(8, "video-scale benchmarks documented as out of scope", body)


def test_criterion_9_determinism_and_persistence(tmp_path):
    def body():
        x = synth("gaussian", 50, seed=4, d=3, mean=1.5, cov=0.2).features
        pts = np.random.default_rng(99).standard_normal((100, 3))

        paths = []
        for tag in ("a", "b"):
            model, _ = train_primal(x, GodsHyper(variant="gods", k=2),
                                    cfg=SolverConfig(max_iters=150), seed=11)
            p = tmp_path / f"g{tag}.json"
            save_model(model, p)
            paths.append(p)
        assert paths[0].read_bytes() == paths[1].read_bytes()
        back = load_model(paths[0])
        s1a, s2a = primal_scores_batch(model, pts)
        s1b, s2b = primal_scores_batch(back, pts)
        np.testing.assert_array_equal(s1a, s1b)
        np.testing.assert_array_equal(s2a, s2b)

        paths = []
        for tag in ("a", "b"):
            model, _ = kods_train(x, KernelSpec(family="rbf", sigma=0.8),
                                  KodsHyper(k=2), cfg=SolverConfig(max_iters=150),
                                  seed=11)
            p = tmp_path / f"k{tag}.json"
            save_model(model, p)
            paths.append(p)
        assert paths[0].read_bytes() == paths[1].read_bytes()
        back = load_model(paths[0])
        s1a, s2a = kods_scores_batch(model, pts)
        s1b, s2b = kods_scores_batch(back, pts)
        np.testing.assert_array_equal(s1a, s1b)
        np.testing.assert_array_equal(s2a, s2b)

    _verdict(9, "seeded training and model files are byte-reproducible", body)
