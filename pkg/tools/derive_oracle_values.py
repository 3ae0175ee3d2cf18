"""Independent oracle derivations for values frozen into the test suite.

Run before the library existed; every computation here is deliberately
naive (brute-force enumeration, direct grid integration, closed forms)
so the library can be checked against it rather than against itself.
Outputs are pasted into tests as frozen constants.
"""
from fractions import Fraction
import math

MASK = (1 << 64) - 1


def splitmix64_next(state):
    # reference algorithm: Steele, Lea, Flood "Fast splittable PRNGs"
    state = (state + 0x9E3779B97F4A7C15) & MASK
    z = state
    z = ((z ^ (z >> 30)) * 0xBF58476D1CE4E5B9) & MASK
    z = ((z ^ (z >> 27)) * 0x94D049BB133111EB) & MASK
    return state, z ^ (z >> 31)


def rng_section():
    print("== splitmix64, seed 0 ==")
    st = 0
    outs = []
    for _ in range(4):
        st, z = splitmix64_next(st)
        outs.append(z)
    print("first u64:", outs)
    print("first uniforms:", [(z >> 11) * 2.0**-53 for z in outs])
    print("first signs (low bit):", [1 if z & 1 else -1 for z in outs])


def greedy_sign_oracle(d, v, lam):
    # direct from-scratch potential comparison, the rule's definition
    phi_plus = sum(math.cosh(lam * (di + vi)) for di, vi in zip(d, v))
    phi_minus = sum(math.cosh(lam * (di - vi)) for di, vi in zip(d, v))
    return 1 if phi_plus <= phi_minus else -1


def signer_section():
    print("== greedy sign examples ==")
    print("d=(3,0) v=(1,0) lam=0.25 ->", greedy_sign_oracle([3, 0], [1, 0], 0.25))
    print("d=0 v=(1,0) lam=0.25 ->", greedy_sign_oracle([0, 0], [1, 0], 0.25))
    # point mass e_1, T=10 hand simulation
    d = 0.0
    signs = []
    for _ in range(10):
        s = greedy_sign_oracle([d], [1.0], 0.5)
        d += s
        signs.append(s)
    print("point-mass T=10 signs:", signs, "max|d| along run:", 1)


def haar_eval_ref(j, k, x):
    # mother wavelet composed directly, x=1.0 treated as left limit
    if j == 0:
        return 1
    y = (2.0 ** (j - 1)) * x - k
    if x == 1.0:
        return -1 if k == 2 ** (j - 1) - 1 else 0
    if 0 <= y < 0.5:
        return 1
    if 0.5 <= y < 1.0:
        return -1
    return 0


def haar_section():
    print("== Haar coefficients of I_{2,1} by exact grid integration ==")
    # integrate over 2^12 cells with Fractions: coeff = E[1_I h] / E[h^2]
    N = 2 ** 12
    lo, hi = Fraction(1, 4), Fraction(2, 4)  # I_{2,1} = [0.25, 0.5)
    coeffs = {}
    for j in range(0, 5):
        ks = [0] if j == 0 else range(2 ** (j - 1))
        for k in ks:
            num = Fraction(0)
            den = Fraction(0)
            for c in range(N):
                x = Fraction(2 * c + 1, 2 * N)  # cell midpoint
                h = haar_eval_ref(j, k, float(x))
                num += Fraction(h, N) * (1 if lo <= x < hi else 0)
                den += Fraction(h * h, N)
            if num != 0:
                coeffs[(j, k)] = num / den
    for key in sorted(coeffs):
        print(" ", key, "->", coeffs[key], "=", float(coeffs[key]))
    print("  l1 total:", float(sum(abs(c) for c in coeffs.values())))

    print("eval((2,1), 0.6) =", haar_eval_ref(2, 1, 0.6))
    print("second moment (4,3) by grid:", float(
        sum(Fraction(haar_eval_ref(4, 3, (2 * c + 1) / (2 * 4096)) ** 2, 4096)
            for c in range(4096))))


def counterexample_section():
    print("== pairwise counterexample, atom enumeration ==")
    for delta in (0.5, 0.1, 0.01):
        p_big = delta ** 2 / (2 * (1 + delta ** 2))
        p_small = 0.5 - p_big
        atoms = [((1 / delta, 1 / delta), p_big),
                 ((-1 / delta, -1 / delta), p_big),
                 ((1.0, -1.0), p_small),
                 ((-1.0, 1.0), p_small)]
        lhs = sum(p * abs(x1 + x2) for (x1, x2), p in atoms)
        rhs = sum(p * (abs(x1) + abs(x2)) for (x1, x2), p in atoms)
        corr = sum(p * x1 * x2 for (x1, x2), p in atoms)
        closed_l = 2 * delta / (1 + delta ** 2)
        closed_r = (2 + 2 * delta) / (1 + delta ** 2)
        print(f"  delta={delta}: lhs={lhs!r} closed={closed_l!r} diff={lhs-closed_l:.3e}")
        print(f"            rhs={rhs!r} closed={closed_r!r} diff={rhs-closed_r:.3e} E[X1X2]={corr:.3e}")


def interval_t2_section():
    print("== interval d=1 T=2 hand simulation, points {0.2, 0.7} ==")
    # coords: 0 = shared constant, 1 = (axis1, Psi_{1,0}); s = 2, lam = 1/4
    lam = 0.25
    d = [0.0, 0.0]
    signs = []
    for x in (0.2, 0.7):
        v = [1.0, float(haar_eval_ref(1, 0, x))]
        s = greedy_sign_oracle(d, v, lam)
        d = [di + s * vi for di, vi in zip(d, v)]
        signs.append(s)
    print("  signs:", signs, "final Haar d:", d)
    # dyadic discrepancies by direct count
    pts = [0.2, 0.7]
    for lvl in (0, 1):
        for m in range(2 ** lvl):
            a, b = m * 2.0 ** -lvl, (m + 1) * 2.0 ** -lvl
            disc = sum(s for s, x in zip(signs, pts) if a <= x < b)
            print(f"  I_({lvl},{m}) disc = {disc}")


def kadane_section():
    print("== max |contiguous sum| brute force ==")
    seq = [1, 1, -1, 1]
    best = 0
    for i in range(len(seq)):
        for j in range(i + 1, len(seq) + 1):
            best = max(best, abs(sum(seq[i:j])))
    print("  {+,+,-,+} ->", best)


def fit_section():
    print("== least-squares slope of log((log2 T)^2) vs log T, T=2^10..2^16 ==")
    xs = [k * math.log(2) for k in range(10, 17)]
    ys = [math.log(k ** 2) for k in range(10, 17)]
    xbar = sum(xs) / len(xs)
    ybar = sum(ys) / len(ys)
    slope = sum((x - xbar) * (y - ybar) for x, y in zip(xs, ys)) / \
        sum((x - xbar) ** 2 for x in xs)
    print("  slope =", repr(slope))
    xs2 = xs
    ys2 = [math.log(math.sqrt(2.0 ** k)) for k in range(10, 17)]
    ybar2 = sum(ys2) / len(ys2)
    slope2 = sum((x - xbar) * (y - ybar2) for x, y in zip(xs2, ys2)) / \
        sum((x - xbar) ** 2 for x in xs2)
    print("  sqrt(T) control slope =", repr(slope2))


def fractal_section():
    # brute-force path enumeration of the fixed interpretation, h <= 14:
    # states: 'top' root (label d), left child enters gadget state g0,
    # right child label 2d/3 whose children both enter g0.
    # gadget: g0 (label 0) -> children g1L, g1R (labels 0);
    # g1L -> children {-d node, g0}; g1R -> children {g0, g0}; below -d all 0.
    print("== fractal beta(h), exact enumeration, interpretation table ==")

    def beta(h, d):
        sd = math.sinh(d)
        s23 = math.sinh(2 * d / 3)
        # enumerate path distribution over (passed2d3, hit) via recursion
        # node kinds: 'g0','g1L','g1R','dead'
        from functools import lru_cache

        @lru_cache(maxsize=None)
        def dist(kind, depth_left):
            # returns dict {(passed, hit): prob} for a path entering `kind`
            # with depth_left more label-levels to consume (kind's own level
            # already counted by the caller emitting its label)
            if depth_left == 0:
                return ((0, 0, Fraction(1)),)
            out = {}

            def add(key, p):
                out[key] = out.get(key, Fraction(0)) + p

            if kind == 'dead':
                add((0, 0), Fraction(1))
            elif kind == 'g0':
                for sub in dist('g1L', depth_left - 1):
                    add((sub[0], sub[1]), Fraction(1, 2) * sub[2])
                for sub in dist('g1R', depth_left - 1):
                    add((sub[0], sub[1]), Fraction(1, 2) * sub[2])
            elif kind == 'g1L':
                # children: -d node (hit), g0; the -d child occupies the
                # next level, so it only exists when depth_left >= 2
                if depth_left >= 2:
                    add((0, 1), Fraction(1, 2))
                else:
                    add((0, 0), Fraction(1, 2))
                for sub in dist('g0', depth_left - 1):
                    add((sub[0], sub[1]), Fraction(1, 2) * sub[2])
            elif kind == 'g1R':
                for sub in dist('g0', depth_left - 1):
                    add(sub[:2], sub[2])
            return tuple((a, b, p) for (a, b), p in sorted(out.items()))

        # top level: h levels total. root consumes level 0.
        acc = {}
        if h == 1:
            acc[(0, 0)] = Fraction(1)
        else:
            for a, b, p in dist('g0', h - 1):
                acc[(a, b)] = acc.get((a, b), Fraction(0)) + Fraction(1, 2) * p
            # right child: 2d/3 at level 1; its two children are g0 at level 2
            if h == 2:
                acc[(1, 0)] = acc.get((1, 0), Fraction(0)) + Fraction(1, 2)
            else:
                for a, b, p in dist('g0', h - 2):
                    key = (a + 1, b)
                    acc[key] = acc.get(key, Fraction(0)) + Fraction(1, 2) * p
        lhs = sum(float(p) * abs(sd * (1 - hit) + n23 * s23)
                  for (n23, hit), p in acc.items())
        rhs = sum(float(p) * (sd * (1 + hit) + n23 * s23)
                  for (n23, hit), p in acc.items())
        return lhs, rhs, rhs / lhs

    def beta_bruteforce(h, d):
        # literal enumeration of all 2^(h-1) equal-probability bit paths,
        # walking node kinds explicitly; the strongest possible cross-check
        sd, s23 = math.sinh(d), math.sinh(2 * d / 3)
        tot_l = tot_r = 0.0
        npaths = 2 ** (h - 1)
        for bits in range(npaths):
            kind = 'root'
            path_sum = path_abs = sd
            for lvl in range(1, h):
                b = (bits >> (lvl - 1)) & 1
                if kind == 'root':
                    if b:
                        kind = 'r23'
                        path_sum += s23
                        path_abs += s23
                    else:
                        kind = 'g0'
                elif kind == 'r23':
                    kind = 'g0'
                elif kind == 'g0':
                    kind = 'g1L' if b == 0 else 'g1R'
                elif kind == 'g1L':
                    if b == 0:
                        kind = 'dead'
                        path_sum -= sd
                        path_abs += sd
                    else:
                        kind = 'g0'
                elif kind == 'g1R':
                    kind = 'g0'
                # 'dead': zeros below, bits ignored
            tot_l += abs(path_sum)
            tot_r += path_abs
        return tot_l / npaths, tot_r / npaths

    for h in (1, 2, 3, 4, 6, 8, 10, 12, 14):
        l1, r1, _ = beta(h, 8.0)
        l2, r2 = beta_bruteforce(h, 8.0)
        tag = "OK" if abs(l1 - l2) < 1e-8 and abs(r1 - r2) < 1e-8 else "MISMATCH"
        print(f"  cross-check h={h:2d}: recursion lhs={l1:.6f} brute lhs={l2:.6f} [{tag}]")

    for h in (1, 4, 8, 12, 16, 20, 24):
        l, r, b = beta(h, 8.0)
        print(f"  h={h:2d}: lhs={l!r} rhs={r!r} beta={b!r}")
    print("  ratios:", end=" ")
    vals = {h: beta(h, 8.0)[2] for h in (8, 12, 16, 20, 24)}
    for h in (8, 12, 16, 20):
        print(f"b({h+4})/b({h})={vals[h+4]/vals[h]:.4f}", end="  ")
    print()


def ordinal_envy_section():
    print("== ordinal envy tiny cases, brute force ==")

    def envy_o(u1, u2, alloc):
        t = len(alloc)
        best = 0
        for player, u in ((1, u1), (2, u2)):
            order = sorted(range(t), key=lambda i: (-u[i], i))
            run = 0
            for idx in order:
                other = 2 if player == 1 else 1
                run += 1 if alloc[idx] == other else -1
                best = max(best, run)
        return best

    print("  single item to player 1:", envy_o([0.5], [0.7], [1]))
    # alternating allocation aligned in both orders
    u = [0.9, 0.8, 0.7, 0.6]
    print("  alternating both orders:", envy_o(u, u, [1, 2, 1, 2]))


def adversary_section():
    print("== orthogonal adversary hand checks ==")
    # d=(1,0,0): coords sorted by |d| desc: coord0 reserved, coords 1,2 get +1
    # running inner product r = 0 -> v = (0,1,1)
    d = [1.0, 0.0, 0.0]
    v = [0.0, 1.0, 1.0]
    print("  d=(1,0,0): v =", v, "dot =", sum(a * b for a, b in zip(d, v)),
          "norm2 =", sum(x * x for x in v))


if __name__ == "__main__":
    rng_section()
    signer_section()
    haar_section()
    counterexample_section()
    interval_t2_section()
    kadane_section()
    fit_section()
    fractal_section()
    ordinal_envy_section()
    adversary_section()
