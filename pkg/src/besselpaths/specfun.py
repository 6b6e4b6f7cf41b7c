"""From-scratch special functions: Gamma, I_nu, K_nu, J_nu, Ai.

All routines are pure functions of real arguments, written directly from
the defining power series and the large-argument asymptotic expansions,
with a fixed series/asymptotic switch point.  They cover exactly the
parameter ranges the rest of the package needs: orders nu > -1 shifted by
small integers, non-negative real arguments.

Conventions
-----------
* power series are summed with a term recurrence and stop once a term
  falls below ``SERIES_EPS`` relative to the partial sum (cap
  ``SERIES_MAX_TERMS`` terms),
* modified Bessel functions switch from series to asymptotics at
  argument ``BESSEL_SWITCH`` = 30,
* the Airy function switches at ``|x|`` = ``AIRY_SWITCH`` = 8 (the
  series side is accumulated in extended precision because of the
  alternating-sum cancellation at the seam).
"""

import math

import numpy as np

SERIES_EPS = 1e-17
SERIES_MAX_TERMS = 500
BESSEL_SWITCH = 30.0
AIRY_SWITCH = 8.0

EULER_GAMMA = 0.57721566490153286060651209008240243


class DomainError(ValueError):
    """Argument outside the supported domain."""


# ----------------------------------------------------------------------
# Gamma function
# ----------------------------------------------------------------------

# Lanczos rational approximation, g = 607/128, 15 coefficients
# (Godfrey's set; relative error below 1e-14 on the positive real axis).
_LANCZOS_G = 607.0 / 128.0
_LANCZOS_COEF = (
    0.99999999999999709182,
    57.156235665862923517,
    -59.597960355475491248,
    14.136097974741747174,
    -0.49191381609762019978,
    0.33994649984811888699e-4,
    0.46523628927048575665e-4,
    -0.98374475304879564677e-4,
    0.15808870322491248884e-3,
    -0.21026444172410488319e-3,
    0.21743961811521264320e-3,
    -0.16431810653676389022e-3,
    0.84418223983852743293e-4,
    -0.26190838401581408670e-4,
    0.36899182659531622704e-5,
)


def _gamma_positive(x):
    # Lanczos for x > 0
    if x < 0.5:
        # reflection to keep the Lanczos argument >= 0.5
        return math.pi / (math.sin(math.pi * x) * _gamma_positive(1.0 - x))
    x -= 1.0
    s = _LANCZOS_COEF[0]
    for k in range(1, len(_LANCZOS_COEF)):
        s += _LANCZOS_COEF[k] / (x + k)
    t = x + _LANCZOS_G + 0.5
    return math.sqrt(2.0 * math.pi) * t ** (x + 0.5) * math.exp(-t) * s


def _gamma_any(x):
    """Gamma for any real non-pole argument (internal; handles x < 0)."""
    if x > 0.0:
        return _gamma_positive(x)
    if x == math.floor(x):
        raise DomainError("gamma pole at non-positive integer %g" % x)
    # reflection formula
    return math.pi / (math.sin(math.pi * x) * _gamma_positive(1.0 - x))


def gamma(x):
    """Gamma function for x > 0, relative error below 1e-13 on [0.1, 50]."""
    if x <= 0.0:
        raise DomainError("gamma requires x > 0, got %g" % x)
    return _gamma_positive(x)


def _digamma_int(n):
    """psi(n) for positive integer n."""
    s = -EULER_GAMMA
    for j in range(1, n):
        s += 1.0 / j
    return s


# ----------------------------------------------------------------------
# Modified Bessel function I_nu
# ----------------------------------------------------------------------

def _bessel_i_series(order, x):
    """Power series sum_k (x/2)^(2k+order) / (k! Gamma(k+order+1)).

    Valid for any real order that is not a negative integer; terms are
    generated by recurrence so no large Gamma values appear.
    """
    half = 0.5 * x
    term = half ** order / _gamma_any(order + 1.0)
    total = term
    for k in range(1, SERIES_MAX_TERMS):
        term *= half * half / (k * (k + order))
        total += term
        if abs(term) < SERIES_EPS * abs(total):
            break
    return total


def _asym_coeffs(order, x, max_terms=40):
    """Terms a_k(order)/x^k of the modified-Bessel asymptotic series.

    a_k = prod_{j=1..k} (4 order^2 - (2j-1)^2) / (k! 8^k).  Yields the
    alternating-sign-free magnitudes; callers apply the sign pattern.
    Stops at SERIES_EPS or once the divergent tail starts growing.
    """
    mu = 4.0 * order * order
    term = 1.0
    terms = [term]
    for k in range(1, max_terms):
        factor = (mu - (2 * k - 1) ** 2) / (8.0 * k * x)
        term = term * factor
        if abs(term) >= abs(terms[-1]) and k > 2:
            break
        terms.append(term)
        if abs(term) < SERIES_EPS:
            break
    return terms


def _bessel_i_asym_scaled(order, x):
    """e^{-x} I_order(x) for large x from the asymptotic expansion."""
    terms = _asym_coeffs(order, x)
    s = 0.0
    for k, t in enumerate(terms):
        s += (-1.0) ** k * t
    return s / math.sqrt(2.0 * math.pi * x)


def bessel_i(order, x):
    """Modified Bessel function of the first kind, real order > -inf, x >= 0."""
    if x < 0.0:
        raise DomainError("bessel_i requires x >= 0, got %g" % x)
    if x == 0.0:
        if order == 0.0:
            return 1.0
        if order > 0.0:
            return 0.0
        raise DomainError("bessel_i diverges at x = 0 for order < 0")
    if x <= BESSEL_SWITCH:
        return _bessel_i_series(order, x)
    return _bessel_i_asym_scaled(order, x) * math.exp(x)


def log_bessel_i(order, x):
    """log I_order(x) for x > 0 (order >= 0), safe against overflow."""
    if x <= 0.0:
        raise DomainError("log_bessel_i requires x > 0")
    if x <= BESSEL_SWITCH:
        return math.log(_bessel_i_series(order, x))
    return x + math.log(_bessel_i_asym_scaled(order, x))


# ----------------------------------------------------------------------
# Modified Bessel function K_nu
# ----------------------------------------------------------------------

def _bessel_k_asym(order, x):
    """K_order(x) from the asymptotic expansion (x large)."""
    terms = _asym_coeffs(order, x)
    s = math.fsum(terms)
    return math.sqrt(math.pi / (2.0 * x)) * math.exp(-x) * s


_GL_NODES_CACHE = {}


def _gl_nodes(npts):
    if npts not in _GL_NODES_CACHE:
        _GL_NODES_CACHE[npts] = np.polynomial.legendre.leggauss(npts)
    return _GL_NODES_CACHE[npts]


def _bessel_k_integral(order, x):
    """K_order(x) = int_0^inf exp(-x cosh t) cosh(order t) dt.

    Composite Gauss-Legendre on [0, T]; the integrand is positive and
    analytic, so panel sums keep full relative accuracy.  T is chosen so
    the discarded tail is below 1e-18 relative.
    """
    nu = abs(order)
    T = math.acosh(1.0 + (60.0 + 10.0 * nu) / x)
    npanel = max(8, int(4 * T))
    nodes, weights = _gl_nodes(40)
    total = 0.0
    edges = np.linspace(0.0, T, npanel + 1)
    for a, b in zip(edges[:-1], edges[1:]):
        mid = 0.5 * (a + b)
        halfw = 0.5 * (b - a)
        t = mid + halfw * nodes
        vals = np.exp(-x * np.cosh(t) + x) * np.cosh(nu * t)
        total += halfw * float(np.dot(weights, vals))
    return total * math.exp(-x)


def _bessel_k_series_int(m, x):
    """K_m(x) for non-negative integer m and small x, by the limit series."""
    half = 0.5 * x
    q = half * half
    # finite part: (1/2)(x/2)^{-m} sum_{k<m} (m-k-1)!/k! (-x^2/4)^k
    s1 = 0.0
    if m > 0:
        term = _gamma_positive(float(m))  # (m-1)!/0!
        s1 = term
        for k in range(1, m):
            term *= -q / (k * (m - k))
            s1 += term
        s1 *= 0.5 * half ** (-m)
    # log part
    s2 = (-1.0) ** (m + 1) * math.log(half) * _bessel_i_series(float(m), x)
    # psi series
    term = 0.5 * half ** m / _gamma_positive(m + 1.0)
    psi_sum = _digamma_int(1) + _digamma_int(m + 1)
    s3 = term * psi_sum
    for k in range(1, SERIES_MAX_TERMS):
        term *= q / (k * (m + k))
        psi_sum = _digamma_int(k + 1) + _digamma_int(m + k + 1)
        contrib = term * psi_sum
        s3 += contrib
        if abs(contrib) < SERIES_EPS * (abs(s3) + 1e-300):
            break
    s3 *= (-1.0) ** m
    return s1 + s2 + s3


def bessel_k(order, x):
    """Modified Bessel function of the second kind, x > 0.

    Regimes: reflection/limit series for x < 2, the cosh integral
    representation for 2 <= x < 30 (the reflection formula loses all
    digits to cancellation there), asymptotic expansion for x >= 30.
    """
    if x <= 0.0:
        raise DomainError("bessel_k requires x > 0, got %g" % x)
    nu = abs(order)  # K is even in its order
    if x >= BESSEL_SWITCH:
        return _bessel_k_asym(nu, x)
    nearest = round(nu)
    if x < 2.0:
        if abs(nu - nearest) < 1e-8:
            return _bessel_k_series_int(int(nearest), x)
        if abs(nu - nearest) > 0.05:
            # reflection formula; cancellation is below 1e-13 for x < 2
            return (
                0.5
                * math.pi
                * (_bessel_i_series(-nu, x) - _bessel_i_series(nu, x))
                / math.sin(math.pi * nu)
            )
    return _bessel_k_integral(nu, x)


# ----------------------------------------------------------------------
# Bessel function J_nu and derivative
# ----------------------------------------------------------------------

_J_SWITCH = 14.0


def _bessel_j_series(order, x):
    half = 0.5 * x
    term = half ** order / _gamma_any(order + 1.0)
    total = term
    for k in range(1, SERIES_MAX_TERMS):
        term *= -half * half / (k * (k + order))
        total += term
        if abs(term) < SERIES_EPS * (abs(total) + 1e-300):
            break
    return total


def _bessel_j_asym(order, x):
    """Hankel asymptotic expansion for J_order(x), x large."""
    mu = 4.0 * order * order
    # A_j = prod_{i<=j} (mu - (2i-1)^2) / (j! 8^j); P sums even j, Q odd j
    P = 1.0
    Q = 0.0
    term = 1.0
    for j in range(1, 40):
        term *= (mu - (2 * j - 1) ** 2) / (8.0 * j * x)
        if abs(term) < SERIES_EPS:
            break
        if j % 2 == 0:
            P += (-1.0) ** (j // 2) * term
        else:
            Q += (-1.0) ** ((j - 1) // 2) * term
    omega = x - 0.5 * order * math.pi - 0.25 * math.pi
    return math.sqrt(2.0 / (math.pi * x)) * (
        math.cos(omega) * P - math.sin(omega) * Q
    )


def bessel_j(order, x):
    """Bessel function of the first kind, real order, x >= 0."""
    if x < 0.0:
        raise DomainError("bessel_j requires x >= 0, got %g" % x)
    if order < 0.0 and order == math.floor(order):
        m = int(-order)
        return (-1.0) ** m * bessel_j(float(m), x)
    if x == 0.0:
        if order == 0.0:
            return 1.0
        if order > 0.0:
            return 0.0
        raise DomainError("bessel_j diverges at x = 0 for order < 0")
    if x <= _J_SWITCH:
        return _bessel_j_series(order, x)
    return _bessel_j_asym(order, x)


def bessel_j_deriv(order, x):
    """d/dx J_order(x) via the recurrence (J_{order-1} - J_{order+1})/2."""
    if x < 0.0:
        raise DomainError("bessel_j_deriv requires x >= 0, got %g" % x)
    if x == 0.0:
        if order == 1.0:
            return 0.5
        if order == 0.0 or order > 1.0:
            return 0.0
        raise DomainError("bessel_j_deriv singular at x = 0 for this order")
    return 0.5 * (bessel_j(order - 1.0, x) - bessel_j(order + 1.0, x))


# ----------------------------------------------------------------------
# Airy function Ai and derivative
# ----------------------------------------------------------------------

def _airy_series(x):
    """(Ai(x), Ai'(x)) by the Maclaurin series, |x| <= AIRY_SWITCH.

    Accumulated in numpy extended precision: the alternating sums lose
    ~6 decimal digits to cancellation at |x| = 8, which long double
    absorbs below the 1e-10 target.
    """
    # Ai(0) and -Ai'(0) as extended-precision literals; double-rounded
    # constants would dominate the error budget at the |x| = 8 seam.
    c1 = np.longdouble("0.3550280538878172392600631860041831763980")
    c2 = np.longdouble("0.2588194037928067984051835601892039634793")
    xl = np.longdouble(x)
    x3 = xl * xl * xl
    # f = sum a_k, a_0 = 1, a_k = a_{k-1} x^3 / ((3k-1)(3k))
    # g = sum b_k, b_0 = x, b_k = b_{k-1} x^3 / ((3k)(3k+1))
    a = np.longdouble(1.0)
    b = xl
    f = a
    g = b
    fp = np.longdouble(0.0)  # f' = sum a_k 3k/x
    gp = np.longdouble(1.0)  # g' = sum b_k (3k+1)/x
    for k in range(1, SERIES_MAX_TERMS):
        a = a * x3 / ((3 * k - 1) * (3 * k))
        b = b * x3 / ((3 * k) * (3 * k + 1))
        f += a
        g += b
        if x != 0.0:
            fp += a * (3 * k) / xl
            gp += b * (3 * k + 1) / xl
        if abs(a) < 1e-22 * abs(f) and abs(b) < 1e-22 * (abs(g) + 1e-300):
            break
    ai = float(c1 * f - c2 * g)
    aip = float(c1 * fp - c2 * gp)
    return ai, aip


def _airy_uv_terms(xi, max_terms=40):
    """Asymptotic coefficients u_k/xi^k and v_k/xi^k for Airy expansions."""
    u = 1.0
    v = 1.0
    us = [1.0]
    vs = [1.0]
    for k in range(1, max_terms):
        u = u * (6 * k - 5) * (6 * k - 1) / (72.0 * k) / xi
        v = u * (6 * k + 1) / (1.0 - 6 * k)
        if abs(u) >= abs(us[-1]) and k > 2:
            break
        us.append(u)
        vs.append(v)
        if abs(u) < SERIES_EPS:
            break
    return us, vs


def _airy_asym_pos(x):
    xi = (2.0 / 3.0) * x ** 1.5
    us, vs = _airy_uv_terms(xi)
    su = 0.0
    sv = 0.0
    for k in range(len(us)):
        su += (-1.0) ** k * us[k]
        sv += (-1.0) ** k * vs[k]
    pref = math.exp(-xi) / (2.0 * math.sqrt(math.pi))
    ai = pref * su / x ** 0.25
    aip = -pref * sv * x ** 0.25
    return ai, aip


def _airy_asym_neg(x):
    X = -x
    xi = (2.0 / 3.0) * X ** 1.5
    us, vs = _airy_uv_terms(xi)
    pe = 0.0  # sum (-1)^k u_{2k} xi^{-2k}
    po = 0.0  # sum (-1)^k u_{2k+1} xi^{-2k-1}
    qe = 0.0
    qo = 0.0
    for k in range(len(us)):
        j, r = divmod(k, 2)
        sgn = (-1.0) ** j
        if r == 0:
            pe += sgn * us[k]
            qe += sgn * vs[k]
        else:
            po += sgn * us[k]
            qo += sgn * vs[k]
    phase = xi + 0.25 * math.pi
    ai = (math.sin(phase) * pe - math.cos(phase) * po) / (
        math.sqrt(math.pi) * X ** 0.25
    )
    aip = -(math.cos(phase) * qe + math.sin(phase) * qo) * X ** 0.25 / math.sqrt(
        math.pi
    )
    return ai, aip


def _airy_both(x):
    if abs(x) <= AIRY_SWITCH:
        return _airy_series(x)
    if x > 0:
        return _airy_asym_pos(x)
    return _airy_asym_neg(x)


def airy_ai(x):
    """Airy function Ai(x), absolute error below 1e-10 for |x| <= 30."""
    return _airy_both(x)[0]


def airy_ai_deriv(x):
    """Derivative Ai'(x), absolute error below 1e-10 for |x| <= 30."""
    return _airy_both(x)[1]


# ----------------------------------------------------------------------
# Combinations used by the spectral analysis
# ----------------------------------------------------------------------

def y1(alpha, z):
    """z^((alpha+1)/2) I_{alpha+1}(2 sqrt(z)) for z > 0."""
    return z ** (0.5 * (alpha + 1.0)) * bessel_i(alpha + 1.0, 2.0 * math.sqrt(z))


def y2(alpha, z):
    """z^((alpha+1)/2) K_{alpha+1}(2 sqrt(z)) for z > 0."""
    return z ** (0.5 * (alpha + 1.0)) * bessel_k(alpha + 1.0, 2.0 * math.sqrt(z))


def y1_deriv(alpha, z):
    """d/dz of y1: z^(alpha/2) I_alpha(2 sqrt(z))."""
    return z ** (0.5 * alpha) * bessel_i(alpha, 2.0 * math.sqrt(z))


def y2_deriv(alpha, z):
    """d/dz of y2: -z^(alpha/2) K_alpha(2 sqrt(z))."""
    return -(z ** (0.5 * alpha)) * bessel_k(alpha, 2.0 * math.sqrt(z))


def wronskian_residual(alpha, z):
    """y1 y2' - y1' y2 + z^alpha / 2, which vanishes identically."""
    return (
        y1(alpha, z) * y2_deriv(alpha, z)
        - y1_deriv(alpha, z) * y2(alpha, z)
        + 0.5 * z ** alpha
    )
