#!/usr/bin/env python3
# -*- coding: utf-8 -*-

"""
Recuperação da medida objetiva a partir de uma diretiva (beta, mu).

A função principal é phi = int k(.; y) dmu(y) sobre a fronteira de Martin;
a dinâmica recuperada é a h-transformada do modelo neutro ao risco por phi.
Todo par devolvido passa pela certificação de admissibilidade.
"""

from dataclasses import dataclass, field, replace
from typing import Any, Callable, Dict, List, NamedTuple, Optional, Sequence, Tuple, Union

import numpy as np

from rossify.core.admissibility import certify
from rossify.core.fields import ScalarField, State, as_points, linear_combination
from rossify.core.martin_nd import (
    KIND_DIRECTION,
    KIND_POINT,
    KIND_SIDE,
    MartinBoundaryPoint,
    constcoef_reduce,
    ou_kernel,
    unit_vector,
)
from rossify.core.model import (
    CandidatePair,
    DiffusionModel,
    TransformedDynamics,
    h_transform,
)
from rossify.core.sturm1d import (
    CRITICAL,
    SUPERCRITICAL,
    boundary_kernel,
    classify_criticality,
    critical_beta,
    critical_solution,
    truncation_windows,
)
from rossify.io.models import AdmissibilityCertificate, RecoveryDirective
from rossify.utils.config import Settings, get_settings
from rossify.utils.exceptions import (
    CriticalityError,
    DomainError,
    QuadratureError,
    RecoveryInfeasibleError,
    SearchError,
    UsageError,
)
from rossify.utils.logger import get_logger

logger = get_logger(__name__)

# |lambda| abaixo disto conta como lambda = 0 na forma reduzida
LAMBDA_ZERO_TOL = 1e-12
# Discriminante relativo abaixo disto conta como beta crítico (1D constante)
CRITICAL_DISC_TOL = 1e-12

Atom = Tuple[MartinBoundaryPoint, float]


class Arc(NamedTuple):
    """Arco de S^1 entre dois ângulos (radianos, sentido anti-horário)."""

    start: float
    end: float

    def contains(self, gamma: np.ndarray) -> bool:
        angle = float(np.arctan2(gamma[1], gamma[0]))
        width = (self.end - self.start) % (2.0 * np.pi)
        offset = (angle - self.start) % (2.0 * np.pi)
        if np.isclose(self.end - self.start, 2.0 * np.pi):
            return True
        return offset <= width + 1e-12


@dataclass(frozen=True, eq=False)
class BoundaryMeasure:
    """
    Medida finita mu na fronteira de Martin como lista de átomos.

    Átomos de peso zero são descartados; em 1D só os lados -1 e +1 são
    pontos válidos.
    """

    atoms: Tuple[Atom, ...]

    def __post_init__(self) -> None:
        kept = []
        for point, weight in self.atoms:
            weight = float(weight)
            if not np.isfinite(weight) or weight < 0:
                raise UsageError(f"Peso inválido {weight} em {point.label}", field="weights")
            if weight > 0:
                kept.append((point, weight))
        if not kept:
            raise UsageError("Medida na fronteira sem massa", field="weights")
        kinds = {p.kind for p, _ in kept}
        if len(kinds) > 1:
            raise UsageError(f"Átomos de tipos misturados: {sorted(kinds)}")
        object.__setattr__(self, "atoms", tuple(kept))

    @property
    def total(self) -> float:
        return float(sum(w for _, w in self.atoms))

    @property
    def points(self) -> List[MartinBoundaryPoint]:
        return [p for p, _ in self.atoms]

    @property
    def weights(self) -> List[float]:
        return [w for _, w in self.atoms]

    def to_list(self) -> List[Dict[str, Any]]:
        return [{"point": p.to_dict(), "weight": w} for p, w in self.atoms]


@dataclass(frozen=True, eq=False)
class RecoveredMeasure:
    """
    Resultado de uma recuperação.

    ``kernels`` está alinhado com ``mu.atoms``: phi é a soma dos núcleos
    ponderados, na mesma ordem.
    """

    principal: CandidatePair
    dynamics: TransformedDynamics
    rho: Any
    mu: BoundaryMeasure
    certificate: AdmissibilityCertificate
    kernels: Tuple[ScalarField, ...]
    xi: np.ndarray
    directive: RecoveryDirective
    base: DiffusionModel
    description: str = ""
    closed_form: Optional[np.ndarray] = None
    notes: Tuple[str, ...] = field(default_factory=tuple)

    @property
    def beta(self) -> float:
        return self.principal.lam

    @property
    def phi(self) -> ScalarField:
        return self.principal.h

    @property
    def dim(self) -> int:
        return self.base.dim


def _settings(settings: Optional[Settings]) -> Settings:
    return settings if settings is not None else get_settings()


def _finish(
    model: DiffusionModel,
    beta: float,
    phi: ScalarField,
    mu: BoundaryMeasure,
    kernels: Sequence[ScalarField],
    directive: RecoveryDirective,
    settings: Settings,
    description: str,
    certificate: Optional[AdmissibilityCertificate] = None,
    notes: Sequence[str] = (),
) -> RecoveredMeasure:
    """Certifica o par (beta, phi) e monta a medida recuperada."""
    pair = CandidatePair(float(beta), phi)
    if certificate is None:
        certificate = certify(model, pair, settings=settings)
    if not certificate.admissible:
        logger.error(f"Par ({beta:g}, {phi.label}) rejeitado: {certificate.verdict}")
        raise RecoveryInfeasibleError(
            f"Função principal {phi.label} não admissível ({certificate.verdict}"
            + (f": {certificate.reason}" if certificate.reason else "")
            + ")",
            certificate=certificate,
        )
    dynamics = h_transform(model, pair)
    logger.info(f"Recuperação {directive.mode} em {model.name}: beta={beta:g}, phi={description}")
    return RecoveredMeasure(
        principal=pair,
        dynamics=dynamics,
        rho=dynamics.rho,
        mu=mu,
        certificate=certificate,
        kernels=tuple(kernels),
        xi=np.asarray(model.reference, dtype=float),
        directive=directive,
        base=model,
        description=description,
        closed_form=None if phi.log_gradient is None else phi.log_gradient.copy(),
        notes=tuple(notes),
    )


def _closed_form_1d(model: DiffusionModel) -> bool:
    iv = model.domain.intervals[0]
    return model.is_constant_coefficient and not iv.left_finite and not iv.right_finite


def _exponential_kernels_1d(
    model: DiffusionModel, beta: float, xi: float
) -> Dict[int, ScalarField]:
    """
    Núcleos e^{alpha (x - xi)} de coeficientes constantes.

    As raízes de 1/2 a alpha^2 + k alpha + beta - r = 0; a maior é mínima
    na esquerda e dá k(.; +1).
    """
    a, k, r = model.constant_coefficients()
    a, k = float(a[0, 0]), float(k[0])
    disc = k * k - 2.0 * a * (beta - r)
    if abs(disc) <= CRITICAL_DISC_TOL * max(1.0, k * k, abs(2.0 * a * (beta - r))):
        raise RecoveryInfeasibleError(f"beta={beta:g} é crítico: use o modo recurrent")
    if disc < 0:
        raise CriticalityError(f"beta={beta:g} acima do valor crítico", klass=SUPERCRITICAL)
    root = np.sqrt(disc)
    kernels = {}
    for side, alpha in ((1, (-k + root) / a), (-1, (-k - root) / a)):
        kernels[side] = ScalarField.exponential(
            np.array([alpha]), scale=float(np.exp(-alpha * xi)), label=f"exp({alpha:.6g}(x - xi))"
        )
    return kernels


def _numeric_kernel_1d(
    model: DiffusionModel, beta: float, side: int, xi: float, settings: Settings
) -> ScalarField:
    try:
        kernel = boundary_kernel(model, beta, side, xi, settings)
    except CriticalityError as e:
        if e.klass == CRITICAL:
            raise RecoveryInfeasibleError(f"beta={beta:g} é crítico: use o modo recurrent") from e
        raise
    if kernel.ambiguous:
        raise RecoveryInfeasibleError(
            f"Núcleo k(.;{side:+d}) não induz deriva rumo à fronteira "
            f"(deriva {kernel.edge_drift:.3e} em x={kernel.edge:g})"
        )
    return kernel.field


def _kernels_1d(
    model: DiffusionModel, beta: float, sides: Sequence[int], settings: Settings
) -> Dict[int, ScalarField]:
    if model.dim != 1:
        raise UsageError(f"Recuperação 1D exige modelo unidimensional (N={model.dim})")
    xi = float(model.reference[0])
    if _closed_form_1d(model):
        kernels = _exponential_kernels_1d(model, beta, xi)
        return {side: kernels[side] for side in sides}
    report = classify_criticality(model, beta, xi, settings)
    if report.klass == SUPERCRITICAL:
        raise CriticalityError(
            f"beta={beta:g} supercrítico para {model.name}: {report.witness}", klass=SUPERCRITICAL
        )
    if report.klass == CRITICAL:
        raise RecoveryInfeasibleError(f"beta={beta:g} é crítico: use o modo recurrent")
    return {side: _numeric_kernel_1d(model, beta, side, xi, settings) for side in sides}


def recover_1d(
    model: DiffusionModel,
    beta: float,
    side: int,
    settings: Optional[Settings] = None,
    certificate: Optional[AdmissibilityCertificate] = None,
) -> RecoveredMeasure:
    """
    Recuperação transiente: phi = k(.; side), mu = delta_side.

    Raises:
        CriticalityError: Se beta for supercrítico.
        RecoveryInfeasibleError: Se beta for crítico ou k(.; side) não for admissível.
    """
    settings = _settings(settings)
    if side not in (-1, 1):
        raise UsageError(f"Lado deve ser -1 ou +1, recebido {side}", field="side")
    kernel = _kernels_1d(model, beta, [side], settings)[side]
    directive = RecoveryDirective(beta=beta, mode="transient_side", side=side)
    mu = BoundaryMeasure(((MartinBoundaryPoint.at_side(side), 1.0),))
    return _finish(
        model, beta, kernel, mu, [kernel], directive, settings,
        description=f"k(x;{side:+d})", certificate=certificate,
    )


def recover_mixture_1d(
    model: DiffusionModel,
    beta: float,
    p: float,
    q: float,
    settings: Optional[Settings] = None,
    certificate: Optional[AdmissibilityCertificate] = None,
) -> RecoveredMeasure:
    """
    phi = p k(.; -1) + q k(.; +1), com p, q >= 0 e p + q = 1.

    Pesos nulos removem o átomo: p = 1 coincide com recover_1d(side=-1).
    """
    settings = _settings(settings)
    p, q = float(p), float(q)
    if p < 0 or q < 0 or abs(p + q - 1.0) > 1e-9:
        raise UsageError(f"Pesos devem ser não negativos com p+q=1 (p={p}, q={q})", field="weights")
    sides = [s for s, w in ((-1, p), (1, q)) if w > 0]
    kernels = _kernels_1d(model, beta, sides, settings)
    weights = {-1: p, 1: q}
    ordered = [kernels[s] for s in sides]
    if len(sides) == 1:
        phi = ordered[0]
    else:
        phi = linear_combination(ordered, [weights[s] for s in sides], label=f"{p:g} k(x;-1) + {q:g} k(x;+1)")
    mu = BoundaryMeasure(tuple((MartinBoundaryPoint.at_side(s), weights[s]) for s in sides))
    directive = RecoveryDirective(beta=beta, mode="mixture", weights=[p, q])
    return _finish(
        model, beta, phi, mu, ordered, directive, settings,
        description=f"{p:g} k(x;-1) + {q:g} k(x;+1)", certificate=certificate,
    )


def recover_recurrent_1d(
    model: DiffusionModel,
    settings: Optional[Settings] = None,
    certificate: Optional[AdmissibilityCertificate] = None,
) -> RecoveredMeasure:
    """
    Recuperação recorrente: beta = beta-barra e phi a solução positiva crítica.

    Em coeficientes constantes a forma fechada é beta-barra = r + k^2/(2a)
    e phi = exp(-k (x - xi)/a).

    Raises:
        RecoveryInfeasibleError: Se a busca falhar ou o par não for admissível.
    """
    settings = _settings(settings)
    if model.dim != 1:
        raise UsageError(f"Recuperação recorrente exige modelo 1D (N={model.dim})")
    xi = float(model.reference[0])
    if _closed_form_1d(model):
        a, k, r = model.constant_coefficients()
        a, k = float(a[0, 0]), float(k[0])
        beta = r + k * k / (2.0 * a)
        alpha = -k / a
        phi = ScalarField.exponential(
            np.array([alpha]), scale=float(np.exp(-alpha * xi)), label=f"exp({alpha:.6g}(x - xi))"
        )
    else:
        try:
            beta = critical_beta(model, xi=xi, settings=settings)
            solution = critical_solution(model, beta, xi, settings)
        except (SearchError, CriticalityError) as e:
            raise RecoveryInfeasibleError(f"Par crítico indisponível: {e}") from e
        phi = solution.as_field(model, label=f"phi critica beta={beta:.8g}")
    mu = BoundaryMeasure(((MartinBoundaryPoint.single(), 1.0),))
    directive = RecoveryDirective(beta=beta, mode="recurrent")
    return _finish(
        model, beta, phi, mu, [phi], directive, settings,
        description=f"phi crítica (beta={beta:.8g})", certificate=certificate,
    )


def _reduced(model: DiffusionModel, beta: float):
    if not model.is_constant_coefficient:
        raise UsageError(
            f"Recuperação direcional exige coeficientes constantes (modelo {model.name})"
        )
    reduction = constcoef_reduce(model, beta)
    lam = reduction.lam
    if abs(lam) <= LAMBDA_ZERO_TOL:
        lam = 0.0
    if lam > 0:
        raise RecoveryInfeasibleError(
            f"lambda={lam:g} > 0 na forma reduzida: beta acima do valor crítico"
        )
    return reduction, lam


def _exponential_at(theta: np.ndarray, xi: np.ndarray, label: str) -> ScalarField:
    """exp(theta.(x - xi)), igual a 1 em xi."""
    return ScalarField.exponential(theta, scale=float(np.exp(-theta @ xi)), label=label)


def recover_direction_nd(
    model: DiffusionModel,
    beta: float,
    gamma: Sequence[float],
    settings: Optional[Settings] = None,
    certificate: Optional[AdmissibilityCertificate] = None,
) -> RecoveredMeasure:
    """
    Recuperação direcional em coeficientes constantes (deriva linear vai para o OU).

    lambda < 0: phi = exp(theta.x) com theta = sqrt(-lambda) S^T gamma + c.
    lambda = 0 com N >= 3: fronteira de um ponto, phi = exp(c.x).

    Raises:
        RecoveryInfeasibleError: Se lambda > 0, ou lambda = 0 com N <= 2.
    """
    settings = _settings(settings)
    if model.drift.linear is not None and model.drift.constant is None:
        return recover_ou(model, gamma, beta, settings, certificate)
    vec = unit_vector(gamma, model.dim)
    reduction, lam = _reduced(model, beta)
    xi = np.asarray(model.reference, dtype=float)
    if lam == 0.0:
        if model.dim <= 2:
            raise RecoveryInfeasibleError(
                f"lambda=0 com N={model.dim}: operador crítico sem fronteira direcional"
            )
        phi = _exponential_at(reduction.c, xi, "exp(c.(x - xi))")
        point = MartinBoundaryPoint.single()
    else:
        phi = _exponential_at(reduction.theta(vec), xi, f"exp(theta.(x - xi)) gamma={vec.tolist()}")
        point = MartinBoundaryPoint.at_direction(vec)
    mu = BoundaryMeasure(((point, 1.0),))
    directive = RecoveryDirective(beta=beta, mode="direction_nd", gamma=vec.tolist())
    return _finish(
        model, beta, phi, mu, [phi], directive, settings,
        description=phi.label, certificate=certificate,
    )


def recover_ratio_nd(
    model: DiffusionModel,
    beta: float,
    p: Sequence[float],
    settings: Optional[Settings] = None,
    certificate: Optional[AdmissibilityCertificate] = None,
) -> RecoveredMeasure:
    """
    Diretiva de razão de longo prazo: X_i(t)/t -> c p_i para i <= k, demais 0.

    p tem p_1..p_k > 0 seguidos de zeros e norma unitária; a direção é gamma = p.
    """
    ratio = np.asarray(p, dtype=float).reshape(-1)
    k = 0
    while k < ratio.size and ratio[k] > 0:
        k += 1
    if k == 0 or np.any(ratio[k:] != 0):
        raise UsageError(f"Razão deve ter p1..pk > 0 seguidos de zeros: {ratio.tolist()}", field="ratio")
    recovered = recover_direction_nd(model, beta, ratio, settings, certificate)
    directive = RecoveryDirective(beta=beta, mode="ratio_nd", ratio=ratio.tolist())
    return _with_directive(recovered, directive)


def _with_directive(recovered: RecoveredMeasure, directive: RecoveryDirective) -> RecoveredMeasure:
    return replace(recovered, directive=directive)


def recover_measure_nd(
    model: DiffusionModel,
    beta: float,
    atoms: Sequence[Tuple[Sequence[float], float]],
    settings: Optional[Settings] = None,
    certificate: Optional[AdmissibilityCertificate] = None,
) -> RecoveredMeasure:
    """phi = sum w_i k(.; gamma_i) para uma medida atômica em S^{N-1}."""
    settings = _settings(settings)
    if not atoms:
        raise UsageError("Medida sem átomos", field="measure")
    reduction, lam = _reduced(model, beta)
    if lam == 0.0:
        raise RecoveryInfeasibleError("lambda=0: não há fronteira direcional para uma medida")
    xi = np.asarray(model.reference, dtype=float)
    pairs = [(unit_vector(g, model.dim), float(w)) for g, w in atoms]
    pairs = [(g, w) for g, w in pairs if w > 0]
    mu = BoundaryMeasure(tuple((MartinBoundaryPoint.at_direction(g), w) for g, w in pairs))
    kernels = [
        _exponential_at(reduction.theta(g), xi, f"k(x;{np.round(g, 6).tolist()})")
        for g, _ in pairs
    ]
    phi = linear_combination(kernels, [w for _, w in pairs], label=f"int k dmu ({len(pairs)} átomos)")
    directive = RecoveryDirective(
        beta=beta, mode="measure_nd",
        measure=[{"gamma": g.tolist(), "weight": w} for g, w in pairs],
    )
    return _finish(
        model, beta, phi, mu, kernels, directive, settings,
        description=phi.label, certificate=certificate,
    )


def recover_ou(
    model: DiffusionModel,
    gamma: Sequence[float],
    beta: Optional[float] = None,
    settings: Optional[Settings] = None,
    certificate: Optional[AdmissibilityCertificate] = None,
) -> RecoveredMeasure:
    """
    Núcleo do OU dX = dW + BX dt com taxa constante beta = r, e h-transform.

    No caso misto usa-se a forma triangular B-chapéu; não há afirmação de
    unicidade e o par precisa passar pela certificação.
    """
    settings = _settings(settings)
    if model.dim != 2 or model.drift.linear is None:
        raise UsageError("Recuperação OU exige modelo 2D com deriva linear B x")
    sigma = model.sigma.constant
    if sigma is None or not np.allclose(sigma @ sigma.T, np.eye(2), atol=1e-12):
        raise UsageError("Recuperação OU exige sigma = I")
    if model.rate.constant is None:
        raise UsageError("Recuperação OU exige taxa constante")
    r = float(model.rate.constant)
    beta = r if beta is None else float(beta)
    if abs(beta - r) > 1e-12:
        raise UsageError(f"No OU beta deve ser igual à taxa r={r:g} (recebido {beta:g})", field="beta")
    try:
        kernel, point = ou_kernel(model.drift.linear, gamma, settings)
    except (DomainError, QuadratureError) as e:
        raise RecoveryInfeasibleError(f"Núcleo OU indisponível: {e}") from e
    notes = [] if point.kind != KIND_DIRECTION else ["núcleo OU sem afirmação de unicidade"]
    mu = BoundaryMeasure(((point, 1.0),))
    directive = RecoveryDirective(beta=beta, mode="ou", gamma=[float(g) for g in gamma])
    return _finish(
        model, beta, kernel, mu, [kernel], directive, settings,
        description=kernel.label, certificate=certificate, notes=notes,
    )


def recover(
    model: DiffusionModel,
    directive: RecoveryDirective,
    settings: Optional[Settings] = None,
    certificate: Optional[AdmissibilityCertificate] = None,
) -> RecoveredMeasure:
    """
    Despacha uma diretiva para o modo correspondente.

    ``certificate`` pula a certificação (usado ao reconstruir uma saída
    de ``recover`` já certificada).
    """
    mode = directive.mode
    beta = directive.beta
    if mode == "transient_side":
        result = recover_1d(model, beta, directive.side, settings, certificate)
    elif mode == "mixture":
        p, q = directive.weights
        result = recover_mixture_1d(model, beta, p, q, settings, certificate)
    elif mode == "recurrent":
        result = recover_recurrent_1d(model, settings, certificate)
    elif mode == "direction_nd":
        result = recover_direction_nd(model, beta, directive.gamma, settings, certificate)
    elif mode == "ratio_nd":
        result = recover_ratio_nd(model, beta, directive.ratio, settings, certificate)
    elif mode == "measure_nd":
        atoms = [(a.gamma, a.weight) for a in directive.measure]
        result = recover_measure_nd(model, beta, atoms, settings, certificate)
    elif mode == "ou":
        result = recover_ou(model, directive.gamma, beta, settings, certificate)
    else:
        raise UsageError(f"Modo de recuperação desconhecido: {mode}", field="mode")
    return _with_directive(result, directive)


Selector = Union[int, str, MartinBoundaryPoint, Arc, Sequence[float]]


def _selects(selector: Selector, point: MartinBoundaryPoint, dim: int) -> bool:
    if isinstance(selector, MartinBoundaryPoint):
        return selector.matches(point)
    if isinstance(selector, Arc):
        if point.kind != KIND_DIRECTION or dim != 2:
            raise UsageError("Arcos só existem na fronteira direcional em 2D", field="A")
        return selector.contains(point.gamma)
    if isinstance(selector, str):
        names = {"left": -1, "right": 1, "point": 0}
        key = selector.strip().lower()
        if key not in names:
            raise UsageError(f"Conjunto de fronteira desconhecido: {selector}", field="A")
        if key == "point":
            if point.kind != KIND_POINT:
                raise UsageError("'point' só existe na fronteira de um ponto", field="A")
            return True
        selector = names[key]
    if isinstance(selector, (int, np.integer)):
        if point.kind != KIND_SIDE:
            raise UsageError(f"Lado {selector} fora da fronteira deste modelo", field="A")
        return point.side == int(selector)
    vec = unit_vector(selector, dim)
    if point.kind != KIND_DIRECTION:
        raise UsageError("Direção fora da fronteira deste modelo", field="A")
    return point.matches(MartinBoundaryPoint.at_direction(vec))


def limiting_distribution(
    recovered: RecoveredMeasure, x: State, A: Union[Selector, Sequence[Selector], None]
) -> float:
    """
    P(lim X_t in A | X_0 = x) = phi(x)^{-1} sum_{y in A} k(x; y) mu(y).

    ``A`` é um lado (-1/+1 ou "left"/"right"), um ponto de fronteira, uma
    direção, um Arc em 2D, uma lista destes, ou None para a fronteira toda.
    O denominador é a mesma soma sobre todos os átomos, de modo que a
    fronteira inteira dá exatamente 1.
    """
    points, _ = as_points(x, recovered.dim)
    recovered.base.domain.require_interior(points)
    if A is None:
        selectors: List[Selector] = []
    elif isinstance(A, (MartinBoundaryPoint, Arc, str, int, np.integer)):
        selectors = [A]
    elif len(A) and all(isinstance(v, (int, float, np.floating)) for v in A) and recovered.dim > 1:
        selectors = [A]
    else:
        selectors = list(A)
    total = 0.0
    selected = 0.0
    for (point, weight), kernel in zip(recovered.mu.atoms, recovered.kernels):
        term = weight * float(kernel.values(points)[0])
        total = total + term
        if A is None or any(_selects(s, point, recovered.dim) for s in selectors):
            selected = selected + term
    if not total > 0:
        raise UsageError(f"Massa nula em x={points[0].tolist()}")
    return float(selected / total)


def _far_point(recovered: RecoveredMeasure, point: MartinBoundaryPoint, settings: Settings) -> np.ndarray:
    model = recovered.base
    if point.kind == KIND_SIDE:
        xi = float(recovered.xi[0])
        lo, hi = truncation_windows(model, xi, settings)[0]
        return np.array([hi if point.side == 1 else lo])
    if point.kind == KIND_DIRECTION:
        cutoff = settings.truncation
        curve: Callable[[float], np.ndarray] = point.curve
        t = 1.0
        for _ in range(80):
            far = np.asarray(curve(t), dtype=float)
            if np.linalg.norm(far) >= cutoff:
                return far
            t *= 1.25
        raise UsageError(f"Curva de Martin de {point.label} não atinge |x|={cutoff:g}")
    raise UsageError("Fronteira de um ponto não tem direção de referência")


def boundary_value_reference(
    recovered: RecoveredMeasure,
    f: ScalarField,
    x: State,
    settings: Optional[Settings] = None,
) -> float:
    """
    Limite previsto de e^{beta t} P_t f(x): sum k(x; y) mu(y) lim (f/phi)(y).

    O limite de f/phi em cada átomo é avaliado no ponto da curva de Martin
    na distância de truncamento.

    Raises:
        UsageError: Para a fronteira de um único ponto.
    """
    settings = _settings(settings)
    points, _ = as_points(x, recovered.dim)
    total = 0.0
    for (point, weight), kernel in zip(recovered.mu.atoms, recovered.kernels):
        far = _far_point(recovered, point, settings)[None, :]
        with np.errstate(all="ignore"):
            phi_far = float(recovered.phi.raw(far)[0])
            g = float(f.raw(far)[0]) / phi_far if phi_far > 0 else 0.0
        if not np.isfinite(g):
            g = 0.0
        total += float(kernel.values(points)[0]) * weight * g
    return float(total)
