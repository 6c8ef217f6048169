"""Composite physics loss over a collocation set and the two-phase trainer."""

from __future__ import annotations

import time
from dataclasses import asdict, dataclass, field

import numpy as np

from .autodiff import D1, D2, H11, H12, H22, VAL, NonFiniteError, network_jets, network_jets_vjp
from .elasticity import Material
from .geometry import CollocationSet, CrackedGeometry, collocation
from .kinematics import CrackTip, EnrichedModel
from .network import ActivationKind, init_network
from .optim import AdamState, LBFGSState, LineSearchError, adam_step, lbfgs_step

TERMS = ("pde1", "pde2", "u1", "u2", "t1", "t2", "iface_u", "iface_t")


class DivergenceError(RuntimeError):
    pass


@dataclass(frozen=True)
class LossBreakdown:
    pde1: float = 0.0
    pde2: float = 0.0
    u1: float = 0.0
    u2: float = 0.0
    t1: float = 0.0
    t2: float = 0.0
    iface_u: float = 0.0
    iface_t: float = 0.0
    total: float = 0.0

    def terms(self):
        return {k: getattr(self, k) for k in TERMS}

    def to_dict(self):
        return asdict(self)


@dataclass(frozen=True)
class NetArch:
    hidden_layers: int = 5
    neurons: int = 20
    activation: ActivationKind = ActivationKind.SWISH

    def __post_init__(self):
        object.__setattr__(self, "activation", ActivationKind(self.activation))
        if self.hidden_layers < 1 or self.neurons < 1:
            raise ValueError("network needs at least one hidden layer with one neuron")


@dataclass(frozen=True)
class ProblemDefinition:
    """A cracked body: material, split geometry with conditions, and sampling."""

    material: Material
    geometry: CrackedGeometry
    grid: tuple = (30, 180)
    boundary_density: float | None = None
    body_force: tuple = (0.0, 0.0)
    exclusion_factor: float = 1e-3
    normalize_inputs: bool = True

    @property
    def crack_length(self):
        return self.geometry.crack_length

    def tips(self):
        eps = self.exclusion_factor * self.crack_length
        return tuple(CrackTip(p, o, exclusion_radius=eps) for p, o in self.geometry.tip_positions)

    def density(self):
        if self.boundary_density is not None:
            return float(self.boundary_density)
        allv = np.vstack([s.polygon for s in self.geometry.subdomains])
        span = allv.max(axis=0) - allv.min(axis=0)
        m, n = self.grid
        return 1.0 / min(span[0] / (m - 1), span[1] / (n - 1))

    def collocation(self):
        m, n = self.grid
        return collocation(self.geometry, self.tips(), m, n, self.density())


def build_model(problem: ProblemDefinition, arch: NetArch, seed=0, enriched=True):
    """Fresh model: one network per subdomain, zero tip coefficients."""
    seeds = np.random.SeedSequence(seed).generate_state(len(problem.geometry.subdomains))
    nets = []
    for sd, s in zip(problem.geometry.subdomains, seeds):
        net = init_network(arch.hidden_layers, arch.neurons, arch.activation, int(s))
        if problem.normalize_inputs:
            lo, hi = sd.polygon.min(axis=0), sd.polygon.max(axis=0)
            net = net.with_input_map(0.5 * (lo + hi), 0.5 * (hi - lo))
        nets.append(net)
    nets = tuple(nets)
    return EnrichedModel(nets, problem.tips(), problem.material, problem.geometry.subdomains, enriched)


class _Block:
    """All points one subdomain network is evaluated at, with slices per role."""

    def __init__(self, points, basis):
        self.points = points
        self.basis = basis
        self.slices = {}


class LossProblem:
    """Enriched composite loss with an exact gradient over the flat parameters.

    Points are grouped per subdomain so each network is evaluated once per
    call; the enrichment basis jets are precomputed because they do not
    depend on trainable parameters.
    """

    def __init__(self, model: EnrichedModel, samples: CollocationSet, body_force=(0.0, 0.0), weights=None):
        self.template = model
        self.samples = samples
        self.material = model.material
        self.body_force = tuple(float(f) for f in body_force)
        self.weights = {k: 1.0 for k in TERMS}
        if weights:
            unknown = set(weights) - set(TERMS)
            if unknown:
                raise ValueError(f"unknown loss weights {sorted(unknown)}")
            self.weights.update(weights)
        self.blocks = []
        n_sub = len(model.networks)
        iface_parts = [[] for _ in range(n_sub)]
        for k, ip in enumerate(samples.interface):
            iface_parts[ip.sub_a].append(("a", k, ip.points))
            iface_parts[ip.sub_b].append(("b", k, ip.points))
        for s in range(n_sub):
            parts = [("interior", samples.interior[s]), ("boundary", samples.boundary[s].points)]
            parts += [(f"iface_{side}{k}", pts) for side, k, pts in iface_parts[s]]
            pts, offset, slices = [], 0, {}
            for name, p in parts:
                slices[name] = slice(offset, offset + len(p))
                offset += len(p)
                pts.append(p)
            points = np.concatenate(pts) if pts else np.zeros((0, 2))
            basis = model.basis_jets(points, s) if len(points) else None
            block = _Block(points, basis)
            block.slices = slices
            self.blocks.append(block)
        self.n_pde = sum(len(p) for p in samples.interior)
        bnd = samples.boundary
        self.n_u = [sum(int(np.sum(~np.isnan(b.u_target[:, c]))) for b in bnd) for c in range(2)]
        self.n_t = [sum(int(np.sum(~np.isnan(b.t_target[:, c]))) for b in bnd) for c in range(2)]
        self.n_iface = sum(len(ip.points) for ip in samples.interface)
        if self.n_pde == 0:
            raise ValueError("loss needs at least one interior collocation point")
        self.frozen = np.zeros(model.n_params, dtype=bool)
        if not model.enriched:
            self.frozen[model.n_network_params :] = True

    # stress/traction helpers, linear in the jets
    def _traction(self, u, normals):
        mu, lam = self.material.mu, self.material.lame_ratio
        e11, e22 = u[D1, :, 0], u[D2, :, 1]
        s11 = 2 * mu * ((1 + lam) * e11 + lam * e22)
        s22 = 2 * mu * (lam * e11 + (1 + lam) * e22)
        s12 = mu * (u[D2, :, 0] + u[D1, :, 1])
        n1, n2 = normals[:, 0], normals[:, 1]
        return np.column_stack([s11 * n1 + s12 * n2, s12 * n1 + s22 * n2])

    def _traction_vjp(self, gt, normals, gu):
        mu, lam = self.material.mu, self.material.lame_ratio
        n1, n2 = normals[:, 0], normals[:, 1]
        gs11 = gt[:, 0] * n1
        gs22 = gt[:, 1] * n2
        gs12 = gt[:, 0] * n2 + gt[:, 1] * n1
        gu[D1, :, 0] += 2 * mu * ((1 + lam) * gs11 + lam * gs22)
        gu[D2, :, 1] += 2 * mu * (lam * gs11 + (1 + lam) * gs22)
        gu[D2, :, 0] += mu * gs12
        gu[D1, :, 1] += mu * gs12

    def _forward(self, params, keep_cache):
        model = self.template.with_params(params)
        k = model.ktilde()
        us, caches = [], []
        for s, block in enumerate(self.blocks):
            u, cache = network_jets(model.networks[s], block.points, keep_cache=keep_cache)
            if block.basis is not None:
                u = u + np.einsum("tm,tmcnj->cnj", k, block.basis)
            us.append(u)
            caches.append(cache)
        return model, us, caches

    def _evaluate(self, params, want_grad):
        model, us, caches = self._forward(params, want_grad)
        gus = [np.zeros_like(u) for u in us] if want_grad else None
        w = self.weights
        terms = dict.fromkeys(TERMS, 0.0)
        mu = self.material.mu
        c = mu / (1.0 - 2.0 * self.material.effective_poisson)
        f1, f2 = self.body_force

        for s, (block, u) in enumerate(zip(self.blocks, us)):
            sl = block.slices["interior"]
            if sl.stop > sl.start:
                ui = u[:, sl]
                r1 = mu * (ui[H11, :, 0] + ui[H22, :, 0]) + c * (ui[H11, :, 0] + ui[H12, :, 1]) + f1
                r2 = mu * (ui[H11, :, 1] + ui[H22, :, 1]) + c * (ui[H22, :, 1] + ui[H12, :, 0]) + f2
                self._check(r1, r2, block.points[sl], "PDE residual")
                terms["pde1"] += float(r1 @ r1) / self.n_pde
                terms["pde2"] += float(r2 @ r2) / self.n_pde
                if want_grad:
                    g1 = w["pde1"] * 2.0 * r1 / self.n_pde
                    g2 = w["pde2"] * 2.0 * r2 / self.n_pde
                    gu = gus[s][:, sl]
                    gu[H11, :, 0] += (mu + c) * g1
                    gu[H22, :, 0] += mu * g1
                    gu[H12, :, 1] += c * g1
                    gu[H11, :, 1] += mu * g2
                    gu[H22, :, 1] += (mu + c) * g2
                    gu[H12, :, 0] += c * g2

            sl = block.slices["boundary"]
            if sl.stop > sl.start:
                b = self.samples.boundary[s]
                ub = u[:, sl]
                gub = gus[s][:, sl] if want_grad else None
                for comp, name in ((0, "u1"), (1, "u2")):
                    mask = ~np.isnan(b.u_target[:, comp])
                    if np.any(mask):
                        res = ub[VAL, mask, comp] - b.u_target[mask, comp]
                        self._check(res, res, b.points[mask], "displacement residual")
                        terms[name] += float(res @ res) / self.n_u[comp]
                        if want_grad:
                            gub[VAL, mask, comp] += w[name] * 2.0 * res / self.n_u[comp]
                tmask = ~np.isnan(b.t_target)
                if np.any(tmask):
                    t = self._traction(ub, b.normals)
                    res = np.where(tmask, t - np.nan_to_num(b.t_target), 0.0)
                    self._check(res[:, 0], res[:, 1], b.points, "traction residual")
                    gt = np.zeros_like(res)
                    for comp, name in ((0, "t1"), (1, "t2")):
                        if self.n_t[comp]:
                            terms[name] += float(res[:, comp] @ res[:, comp]) / self.n_t[comp]
                            gt[:, comp] = w[name] * 2.0 * res[:, comp] / self.n_t[comp]
                    if want_grad:
                        self._traction_vjp(gt, b.normals, gub)

        for k, ip in enumerate(self.samples.interface):
            ba, bb = self.blocks[ip.sub_a], self.blocks[ip.sub_b]
            sa, sb = ba.slices[f"iface_a{k}"], bb.slices[f"iface_b{k}"]
            ua, ub = us[ip.sub_a][:, sa], us[ip.sub_b][:, sb]
            du = ua[VAL] - ub[VAL]
            dt = self._traction(ua, ip.normal_a) + self._traction(ub, -ip.normal_a)
            self._check(du.ravel(), dt.ravel(), np.repeat(ip.points, 2, axis=0), "interface residual")
            terms["iface_u"] += float(np.sum(du * du)) / self.n_iface
            terms["iface_t"] += float(np.sum(dt * dt)) / self.n_iface
            if want_grad:
                gdu = w["iface_u"] * 2.0 * du / self.n_iface
                gdt = w["iface_t"] * 2.0 * dt / self.n_iface
                gua, gub = gus[ip.sub_a][:, sa], gus[ip.sub_b][:, sb]
                gua[VAL] += gdu
                gub[VAL] -= gdu
                self._traction_vjp(gdt, ip.normal_a, gua)
                self._traction_vjp(gdt, -ip.normal_a, gub)

        total = 0.0
        for name in TERMS:
            total += w[name] * terms[name]
        breakdown = LossBreakdown(**terms, total=total)
        if not want_grad:
            return breakdown, None

        grad = np.zeros(self.template.n_params)
        for s, sl in enumerate(model.network_slices()):
            grad[sl] = network_jets_vjp(model.networks[s], caches[s], gus[s])
        if model.tips and model.enriched:
            gk = np.zeros((len(model.tips), 2))
            for block, gu in zip(self.blocks, gus):
                if block.basis is not None:
                    gk += np.einsum("tmcnj,cnj->tm", block.basis, gu)
            grad[model.n_network_params :] = gk.ravel()
        grad[self.frozen] = 0.0
        return breakdown, grad

    @staticmethod
    def _check(a, b, points, what):
        bad = ~(np.isfinite(a) & np.isfinite(b))
        if np.any(bad):
            i = int(np.argmax(bad))
            raise NonFiniteError(f"non-finite {what} at point {tuple(np.atleast_2d(points)[i % len(points)])}")

    def breakdown(self, params):
        return self._evaluate(np.asarray(params, float), want_grad=False)[0]

    def value_and_grad(self, params):
        bd, g = self._evaluate(np.asarray(params, float), want_grad=True)
        return bd.total, g

    def safe_value_and_grad(self, params):
        """Like :meth:`value_and_grad` but maps non-finite evaluations to inf."""
        try:
            with np.errstate(over="ignore", invalid="ignore"):
                f, g = self.value_and_grad(params)
        except NonFiniteError:
            return np.inf, np.full(len(params), np.nan)
        if not np.isfinite(f) or not np.all(np.isfinite(g)):
            return np.inf, np.full(len(params), np.nan)
        return f, g


def assemble_loss(model: EnrichedModel, samples: CollocationSet, material=None, body_force=(0.0, 0.0), weights=None):
    """Loss breakdown of ``model`` on ``samples``; boundary data live in the samples."""
    if material is not None and material != model.material:
        from dataclasses import replace

        model = replace(model, material=material)
    return LossProblem(model, samples, body_force, weights).breakdown(model.flat_params())


@dataclass(frozen=True)
class TrainingConfig:
    iterations: int = 2500
    adam_fraction: float = 0.6
    learning_rate: float = 1e-3
    beta1: float = 0.9
    beta2: float = 0.999
    adam_eps: float = 1e-8
    lbfgs_history: int = 20
    seed: int = 0
    log_every: int = 50
    record_time: bool = True
    weights: dict = field(default_factory=dict)
    divergence_patience: int = 10

    def __post_init__(self):
        if self.iterations < 0:
            raise ValueError("iterations must be >= 0")
        if not 0.0 <= self.adam_fraction <= 1.0:
            raise ValueError("adam_fraction must lie in [0, 1]")


@dataclass(frozen=True)
class TrainingLogRecord:
    iteration: int
    loss: LossBreakdown
    ktilde: list
    phase: str
    wall_clock: float | None = None

    def to_dict(self):
        d = {"iteration": self.iteration, "phase": self.phase, "loss": self.loss.to_dict(), "ktilde": self.ktilde}
        if self.wall_clock is not None:
            d["wall_clock"] = self.wall_clock
        return d


@dataclass
class TrainingResult:
    model: EnrichedModel
    log: list
    best_loss: float
    best_iteration: int
    samples: CollocationSet
    wall_clock: float


def train_model(model: EnrichedModel, loss: LossProblem, config: TrainingConfig, callback=None):
    """Minimise ``loss`` starting from ``model``; Adam then L-BFGS.

    Returns a :class:`TrainingResult` holding the lowest-loss parameters seen.
    """
    t0 = time.perf_counter()
    params = model.flat_params()
    n_adam = int(round(config.adam_fraction * config.iterations))
    adam = AdamState(config.learning_rate, config.beta1, config.beta2, config.adam_eps)
    lbfgs = LBFGSState(history=config.lbfgs_history)
    free = ~loss.frozen
    log = []

    f, g = loss.safe_value_and_grad(params)
    best = (f, params.copy(), 0)
    bad_streak = 0 if np.isfinite(f) else 1

    def record(it, phase, p):
        bd = loss.breakdown(p) if np.isfinite(f) else LossBreakdown(total=float("inf"))
        rec = TrainingLogRecord(
            it,
            bd,
            model.with_params(p).ktilde().tolist(),
            phase,
            round(time.perf_counter() - t0, 3) if config.record_time else None,
        )
        log.append(rec)
        if callback:
            callback(rec)

    record(0, "init", params)
    for it in range(1, config.iterations + 1):
        phase = "adam" if it <= n_adam else "lbfgs"
        if phase == "lbfgs" and np.isfinite(f):
            try:
                params, f, g, lbfgs = lbfgs_step(loss.safe_value_and_grad, params, f, g, lbfgs)
            except LineSearchError:
                lbfgs.reset()
                phase = "adam-fallback"
        if phase != "lbfgs" or not np.isfinite(f):
            if np.all(np.isfinite(g)):
                new, adam = adam_step(params, np.where(free, g, 0.0), adam)
                params = np.where(free, new, params)
            f, g = loss.safe_value_and_grad(params)
        if np.isfinite(f):
            bad_streak = 0
            if f < best[0]:
                best = (f, params.copy(), it)
        else:
            bad_streak += 1
            if bad_streak >= config.divergence_patience:
                raise DivergenceError(
                    f"total loss non-finite for {bad_streak} consecutive steps (iteration {it})"
                )
        if config.log_every and (it % config.log_every == 0 or it == config.iterations):
            record(it, phase, params)

    best_model = model.with_params(best[1])
    return TrainingResult(best_model, log, float(best[0]), best[2], loss.samples, time.perf_counter() - t0)


def train(problem: ProblemDefinition, arch: NetArch, config: TrainingConfig, enriched=True, callback=None):
    """Sample, initialise and train; deterministic in ``config.seed``."""
    samples = problem.collocation()
    model = build_model(problem, arch, config.seed, enriched)
    loss = LossProblem(model, samples, problem.body_force, config.weights)
    return train_model(model, loss, config, callback)
