"""Compiled quadrature kernels for the fractional stiffness assembly.

All functions here are numba-compiled and operate on plain numpy arrays
prepared by :mod:`fracbpx.assembly`.  The element-pair integrals of the
singular kernel ``|x - y|^(-2-2s)`` fall into four classes:

* identical pairs — reduced to a one-dimensional integral over the
  boundary of the difference hexagon (the translate-overlap region of the
  reference simplex with itself), with the radial part integrated in
  closed form;
* edge- and vertex-touching pairs — outer integral over ``x`` on
  geometrically graded shells approaching the contact feature, inner
  integral over ``y`` in polar coordinates with closed-form radial
  moments;
* disjoint pairs — tensor Gauss rules with distance-tiered orders;
* complement term — per quadrature point, the weight
  ``rho(x) = integral over the domain complement of |x-y|^(-2-2s) dy``
  is evaluated exactly per direction (closed-form radial integral out to
  the convex boundary), leaving a smooth angular integral over the
  boundary-corner sectors.

Sign and factor conventions: kernels accumulate contributions already
multiplied by the caller-supplied ``factor`` into the upper triangle
(``row <= col``) of the dense DOF matrix; unordered pair symmetrization
(a factor 2 for distinct element pairs) is baked in here.
"""

import math

import numpy as np
from numba import njit

__all__ = [
    "identical_pairs",
    "touching_pairs",
    "disjoint_pairs",
    "complement_term",
]


@njit(cache=True, inline="always")
def _bary_and_grads(q, lam_point, grads, x, y):
    """Barycentric values at (x, y) and gradients for triangle q (3x2).

    Affine extension: valid for points outside the triangle as well.
    """
    ax, ay = q[0, 0], q[0, 1]
    bx, by = q[1, 0], q[1, 1]
    cx, cy = q[2, 0], q[2, 1]
    det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax)  # = 2*area, > 0
    # lam_i(x) = cross(q_k - q_j, x - q_j) / det for cyclic (i, j, k)
    lam_point[0] = ((cx - bx) * (y - by) - (cy - by) * (x - bx)) / det
    lam_point[1] = ((ax - cx) * (y - cy) - (ay - cy) * (x - cx)) / det
    lam_point[2] = ((bx - ax) * (y - ay) - (by - ay) * (x - ax)) / det
    grads[0, 0] = -(cy - by) / det
    grads[0, 1] = (cx - bx) / det
    grads[1, 0] = -(ay - cy) / det
    grads[1, 1] = (ax - cx) / det
    grads[2, 0] = -(by - ay) / det
    grads[2, 1] = (bx - ax) / det
    return det


@njit(cache=True, inline="always")
def _radial_moments(r0, r1, s):
    """(P0, P1, P2) with P_k = Int_{r0}^{r1} r^(k - 1 - 2s) dr.

    Higher moments reuse the k = 0 powers (r^(k-2s) = r^k * r^(-2s)), so
    only two transcendental evaluations are needed per call.
    """
    e0 = -2.0 * s
    t0 = r0 ** e0
    t1 = r1 ** e0
    p0 = (t1 - t0) / e0
    e1 = 1.0 - 2.0 * s
    if abs(e1) < 1e-9:
        p1 = math.log(r1 / r0)
    else:
        p1 = (r1 * t1 - r0 * t0) / e1
    p2 = (r1 * r1 * t1 - r0 * r0 * t0) / (2.0 - 2.0 * s)
    return p0, p1, p2


@njit(cache=True, inline="always")
def _ray_chord(q, x, y, ux, uy):
    """Entry/exit radii of the ray x + r u through triangle q (3x2).

    Returns (r0, r1, ok): ok is False when the ray misses the triangle.
    """
    rmin = 1e300
    rmax = -1e300
    hits = 0
    for k in range(3):
        px, py = q[k, 0], q[k, 1]
        qx, qy = q[(k + 1) % 3, 0], q[(k + 1) % 3, 1]
        dx, dy = qx - px, qy - py
        denom = ux * dy - uy * dx
        if abs(denom) < 1e-300:
            continue
        r = ((px - x) * dy - (py - y) * dx) / denom
        tau = ((px - x) * uy - (py - y) * ux) / denom
        if -1e-12 <= tau <= 1.0 + 1e-12 and r > 0.0:
            if r < rmin:
                rmin = r
            if r > rmax:
                rmax = r
            hits += 1
    if hits < 2 or rmax - rmin <= 1e-300:
        return 0.0, 0.0, False
    return rmin, rmax, True


# ---------------------------------------------------------------------------
# identical pairs
# ---------------------------------------------------------------------------

@njit(cache=True)
def identical_pairs(ev, coords, dof, s, ux, uw, factor, K):
    """Self-interaction of every element.

    The double integral over T x T of
    ``(lam_a(x) - lam_a(y)) (lam_b(x) - lam_b(y)) |x - y|^(-2-2s)``
    reduces to a sum over the six edges of the difference hexagon of the
    reference simplex; the radial direction is integrated in closed form
    (a Beta-function weight), leaving smooth 1-D integrals evaluated with
    the supplied Gauss rule (``ux``, ``uw`` on [0, 1]).
    """
    m = ev.shape[0]
    nq = ux.shape[0]
    hexpts = np.empty((7, 2))
    hexpts[0, 0], hexpts[0, 1] = 1.0, 0.0
    hexpts[1, 0], hexpts[1, 1] = 0.0, 1.0
    hexpts[2, 0], hexpts[2, 1] = -1.0, 1.0
    hexpts[3, 0], hexpts[3, 1] = -1.0, 0.0
    hexpts[4, 0], hexpts[4, 1] = 0.0, -1.0
    hexpts[5, 0], hexpts[5, 1] = 1.0, -1.0
    hexpts[6, 0], hexpts[6, 1] = 1.0, 0.0
    w2s = 1.0 / ((2.0 - 2.0 * s) * (3.0 - 2.0 * s) * (4.0 - 2.0 * s))
    S = np.empty((3, 3))
    for t in range(m):
        i0, i1, i2 = ev[t, 0], ev[t, 1], ev[t, 2]
        m00 = coords[i1, 0] - coords[i0, 0]
        m10 = coords[i1, 1] - coords[i0, 1]
        m01 = coords[i2, 0] - coords[i0, 0]
        m11 = coords[i2, 1] - coords[i0, 1]
        det = m00 * m11 - m01 * m10
        for a in range(3):
            for b in range(3):
                S[a, b] = 0.0
        for edge in range(6):
            h0x, h0y = hexpts[edge, 0], hexpts[edge, 1]
            h1x, h1y = hexpts[edge + 1, 0], hexpts[edge + 1, 1]
            for q in range(nq):
                u = ux[q]
                wx_ = h0x + u * (h1x - h0x)
                wy_ = h0y + u * (h1y - h0y)
                # reference-gradient dot products: g0=(-1,-1), g1=(1,0), g2=(0,1)
                gw0 = -(wx_ + wy_)
                gw1 = wx_
                gw2 = wy_
                zx = m00 * wx_ + m01 * wy_
                zy = m10 * wx_ + m11 * wy_
                kern = uw[q] * (zx * zx + zy * zy) ** (-1.0 - s)
                S[0, 0] += kern * gw0 * gw0
                S[0, 1] += kern * gw0 * gw1
                S[0, 2] += kern * gw0 * gw2
                S[1, 1] += kern * gw1 * gw1
                S[1, 2] += kern * gw1 * gw2
                S[2, 2] += kern * gw2 * gw2
        scale = factor * det * det * w2s
        for a in range(3):
            ia = dof[ev[t, a]]
            if ia < 0:
                continue
            for b in range(a, 3):
                ib = dof[ev[t, b]]
                if ib < 0:
                    continue
                v = scale * S[a, b]
                if ia <= ib:
                    K[ia, ib] += v
                else:
                    K[ib, ia] += v


# ---------------------------------------------------------------------------
# touching pairs (shared edge or shared vertex)
# ---------------------------------------------------------------------------

@njit(cache=True, inline="always")
def _collapsed_fill(P0x, P0y, P1x, P1y, P2x, P2y, cx, cw, pts, wts):
    """Map a collapsed reference rule onto triangle (P0, P1, P2)."""
    k = cx.shape[0]
    twoa = abs(
        (P1x - P0x) * (P2y - P0y) - (P1y - P0y) * (P2x - P0x)
    )
    for i in range(k):
        xi1 = cx[i, 0]
        xi2 = cx[i, 1]
        pts[i, 0] = P0x + xi1 * (P1x - P0x) + xi2 * (P2x - P0x)
        pts[i, 1] = P0y + xi1 * (P1y - P0y) + xi2 * (P2y - P0y)
        wts[i] = twoa * cw[i]
    return twoa


@njit(cache=True)
def _pair_xpolar(ve, vf, slot_c_mode, slot_e_idx, slot_f_idx, nslots,
                 shell_tris, cx, cw, tx, tw, s, Sloc):
    """Accumulate the x-polar pair integral for one touching pair.

    ``shell_tris``: (nt, 6) corner coordinates of the graded x-shell
    triangles inside element e.  For each outer node x the integrand over
    f is written per slot as ``c_i(x) - r * b_i(theta)``; the radial
    moments are closed-form, the angular integral uses the rule (tx, tw)
    on [0, 1] per fan arc.

    ``slot_c_mode``: 0 -> c = lam_e[slot_e_idx]           (b = 0)
                     1 -> c = -lam_f[slot_f_idx]          (b = grad_f)
                     2 -> c = lam_e[slot_e_idx] - lam_f[slot_f_idx]
                                                          (b = grad_f)
    """
    nt = shell_tris.shape[0]
    kq = cx.shape[0]
    nth = tx.shape[0]
    lam_e = np.empty(3)
    grad_e = np.empty((3, 2))
    lam_f = np.empty(3)
    grad_f = np.empty((3, 2))
    cvals = np.empty(5)
    bvals = np.empty(5)
    fang = np.empty(3)
    fcx = (vf[0, 0] + vf[1, 0] + vf[2, 0]) / 3.0
    fcy = (vf[0, 1] + vf[1, 1] + vf[2, 1]) / 3.0
    for a in range(nslots):
        for b in range(nslots):
            Sloc[a, b] = 0.0
    for it in range(nt):
        p0x, p0y = shell_tris[it, 0], shell_tris[it, 1]
        p1x, p1y = shell_tris[it, 2], shell_tris[it, 3]
        p2x, p2y = shell_tris[it, 4], shell_tris[it, 5]
        twoa = abs((p1x - p0x) * (p2y - p0y) - (p1y - p0y) * (p2x - p0x))
        if twoa < 1e-300:
            continue
        for iq in range(kq):
            xi1 = cx[iq, 0]
            xi2 = cx[iq, 1]
            x = p0x + xi1 * (p1x - p0x) + xi2 * (p2x - p0x)
            y = p0y + xi1 * (p1y - p0y) + xi2 * (p2y - p0y)
            wx = twoa * cw[iq]
            _bary_and_grads(ve, lam_e, grad_e, x, y)
            _bary_and_grads(vf, lam_f, grad_f, x, y)
            for sl in range(nslots):
                mode = slot_c_mode[sl]
                if mode == 0:
                    cvals[sl] = lam_e[slot_e_idx[sl]]
                elif mode == 1:
                    cvals[sl] = -lam_f[slot_f_idx[sl]]
                else:
                    cvals[sl] = lam_e[slot_e_idx[sl]] - lam_f[slot_f_idx[sl]]
            # fan: angles to the three vertices of f, relative to the
            # direction toward the centroid of f
            ref = math.atan2(fcy - y, fcx - x)
            for k in range(3):
                ang = math.atan2(vf[k, 1] - y, vf[k, 0] - x) - ref
                while ang <= -math.pi:
                    ang += 2.0 * math.pi
                while ang > math.pi:
                    ang -= 2.0 * math.pi
                fang[k] = ang
            # sort 3 values
            if fang[0] > fang[1]:
                fang[0], fang[1] = fang[1], fang[0]
            if fang[1] > fang[2]:
                fang[1], fang[2] = fang[2], fang[1]
            if fang[0] > fang[1]:
                fang[0], fang[1] = fang[1], fang[0]
            for arc in range(2):
                alo = fang[arc]
                ahi = fang[arc + 1]
                width = ahi - alo
                if width < 1e-13:
                    continue
                for q in range(nth):
                    theta = ref + alo + width * tx[q]
                    uxd = math.cos(theta)
                    uyd = math.sin(theta)
                    r0, r1, ok = _ray_chord(vf, x, y, uxd, uyd)
                    if not ok:
                        continue
                    p0m, p1m, p2m = _radial_moments(r0, r1, s)
                    wtheta = wx * width * tw[q]
                    for sl in range(nslots):
                        if slot_c_mode[sl] == 0:
                            bvals[sl] = 0.0
                        else:
                            gi = slot_f_idx[sl]
                            bvals[sl] = (
                                grad_f[gi, 0] * uxd + grad_f[gi, 1] * uyd
                            )
                    for a in range(nslots):
                        ca = cvals[a]
                        ba = bvals[a]
                        for b in range(a, nslots):
                            cb = cvals[b]
                            bb = bvals[b]
                            Sloc[a, b] += wtheta * (
                                ca * cb * p0m
                                - (ca * bb + cb * ba) * p1m
                                + ba * bb * p2m
                            )


@njit(cache=True)
def _edge_shells(ve, apex, e0, e1, L, out):
    """Graded shell triangles of e approaching the edge (e0, e1).

    Levels are geometric in the apex barycentric coordinate; each level
    contributes two triangles (the first is degenerate at level 0, the
    last pair is the sliver hugging the shared edge).
    """
    ax, ay = ve[apex, 0], ve[apex, 1]
    b0x, b0y = ve[e0, 0], ve[e0, 1]
    b1x, b1y = ve[e1, 0], ve[e1, 1]
    nt = 0
    hi = 1.0
    for k in range(L + 1):
        lo = 0.5 ** (k + 1) if k < L else 0.0
        # corner points at apex-coordinate mu: mu*apex + (1-mu)*edge_end
        q0x = hi * ax + (1.0 - hi) * b0x
        q0y = hi * ay + (1.0 - hi) * b0y
        q1x = hi * ax + (1.0 - hi) * b1x
        q1y = hi * ay + (1.0 - hi) * b1y
        r0x = lo * ax + (1.0 - lo) * b0x
        r0y = lo * ay + (1.0 - lo) * b0y
        r1x = lo * ax + (1.0 - lo) * b1x
        r1y = lo * ay + (1.0 - lo) * b1y
        out[nt, 0], out[nt, 1] = q0x, q0y
        out[nt, 2], out[nt, 3] = q1x, q1y
        out[nt, 4], out[nt, 5] = r1x, r1y
        nt += 1
        out[nt, 0], out[nt, 1] = q0x, q0y
        out[nt, 2], out[nt, 3] = r1x, r1y
        out[nt, 4], out[nt, 5] = r0x, r0y
        nt += 1
        hi = lo
    return nt


@njit(cache=True)
def _vertex_shells(ve, vloc, L, out):
    """Graded shell triangles of e approaching its vertex ``vloc``."""
    vx, vy = ve[vloc, 0], ve[vloc, 1]
    u1 = (vloc + 1) % 3
    u2 = (vloc + 2) % 3
    u1x, u1y = ve[u1, 0], ve[u1, 1]
    u2x, u2y = ve[u2, 0], ve[u2, 1]
    nt = 0
    hi = 1.0
    for k in range(L):
        lo = 0.5 ** (k + 1)
        a1x = vx + hi * (u1x - vx)
        a1y = vy + hi * (u1y - vy)
        a2x = vx + hi * (u2x - vx)
        a2y = vy + hi * (u2y - vy)
        b1x = vx + lo * (u1x - vx)
        b1y = vy + lo * (u1y - vy)
        b2x = vx + lo * (u2x - vx)
        b2y = vy + lo * (u2y - vy)
        out[nt, 0], out[nt, 1] = b1x, b1y
        out[nt, 2], out[nt, 3] = a1x, a1y
        out[nt, 4], out[nt, 5] = a2x, a2y
        nt += 1
        out[nt, 0], out[nt, 1] = b1x, b1y
        out[nt, 2], out[nt, 3] = a2x, a2y
        out[nt, 4], out[nt, 5] = b2x, b2y
        nt += 1
        hi = lo
    # sliver triangle at the vertex
    t = 0.5 ** L
    out[nt, 0], out[nt, 1] = vx, vy
    out[nt, 2], out[nt, 3] = vx + t * (u1x - vx), vy + t * (u1y - vy)
    out[nt, 4], out[nt, 5] = vx + t * (u2x - vx), vy + t * (u2y - vy)
    nt += 1
    return nt


@njit(cache=True)
def touching_pairs(ev, coords, dof,
                   epair_idx, epair_loc,
                   vpair_idx, vpair_loc,
                   s, L, Lv, cx, cw, tx, tw, factor, K):
    """All element pairs sharing an edge or exactly one vertex.

    ``epair_idx``: (Pe, 2) element indices; ``epair_loc``: (Pe, 6) local
    vertex positions [shared0_e, shared1_e, apex_e, shared0_f, shared1_f,
    apex_f] with matching global ids for the shared slots.
    ``vpair_idx``: (Pv, 2); ``vpair_loc``: (Pv, 2) local positions of the
    shared vertex in e and f.  ``L``/``Lv`` are the geometric shell counts
    toward the contact feature for edge-/vertex-sharing pairs (the
    vertex-pair contribution is smaller, so fewer shells suffice there).
    """
    ve = np.empty((3, 2))
    vf = np.empty((3, 2))
    Sloc = np.empty((5, 5))
    slot_c_mode = np.empty(5, dtype=np.int64)
    slot_e_idx = np.empty(5, dtype=np.int64)
    slot_f_idx = np.empty(5, dtype=np.int64)
    slot_dofs = np.empty(5, dtype=np.int64)
    shell_tris = np.empty((2 * L + 4, 6))

    for p in range(epair_idx.shape[0]):
        e = epair_idx[p, 0]
        f = epair_idx[p, 1]
        for k in range(3):
            ve[k, 0] = coords[ev[e, k], 0]
            ve[k, 1] = coords[ev[e, k], 1]
            vf[k, 0] = coords[ev[f, k], 0]
            vf[k, 1] = coords[ev[f, k], 1]
        s0e, s1e, ape = epair_loc[p, 0], epair_loc[p, 1], epair_loc[p, 2]
        s0f, s1f, apf = epair_loc[p, 3], epair_loc[p, 4], epair_loc[p, 5]
        # slots: shared0, shared1, apex_e, apex_f
        slot_c_mode[0], slot_e_idx[0], slot_f_idx[0] = 2, s0e, s0f
        slot_c_mode[1], slot_e_idx[1], slot_f_idx[1] = 2, s1e, s1f
        slot_c_mode[2], slot_e_idx[2], slot_f_idx[2] = 0, ape, 0
        slot_c_mode[3], slot_e_idx[3], slot_f_idx[3] = 1, 0, apf
        slot_dofs[0] = dof[ev[e, s0e]]
        slot_dofs[1] = dof[ev[e, s1e]]
        slot_dofs[2] = dof[ev[e, ape]]
        slot_dofs[3] = dof[ev[f, apf]]
        nt = _edge_shells(ve, ape, s0e, s1e, L, shell_tris)
        _pair_xpolar(ve, vf, slot_c_mode, slot_e_idx, slot_f_idx, 4,
                     shell_tris[:nt], cx, cw, tx, tw, s, Sloc)
        for a in range(4):
            ia = slot_dofs[a]
            if ia < 0:
                continue
            for b in range(a, 4):
                ib = slot_dofs[b]
                if ib < 0:
                    continue
                v = 2.0 * factor * Sloc[a, b]
                if ia <= ib:
                    K[ia, ib] += v
                else:
                    K[ib, ia] += v

    for p in range(vpair_idx.shape[0]):
        e = vpair_idx[p, 0]
        f = vpair_idx[p, 1]
        for k in range(3):
            ve[k, 0] = coords[ev[e, k], 0]
            ve[k, 1] = coords[ev[e, k], 1]
            vf[k, 0] = coords[ev[f, k], 0]
            vf[k, 1] = coords[ev[f, k], 1]
        sve = vpair_loc[p, 0]
        svf = vpair_loc[p, 1]
        # slots: shared, e-other-1, e-other-2, f-other-1, f-other-2
        e1 = (sve + 1) % 3
        e2 = (sve + 2) % 3
        f1 = (svf + 1) % 3
        f2 = (svf + 2) % 3
        slot_c_mode[0], slot_e_idx[0], slot_f_idx[0] = 2, sve, svf
        slot_c_mode[1], slot_e_idx[1], slot_f_idx[1] = 0, e1, 0
        slot_c_mode[2], slot_e_idx[2], slot_f_idx[2] = 0, e2, 0
        slot_c_mode[3], slot_e_idx[3], slot_f_idx[3] = 1, 0, f1
        slot_c_mode[4], slot_e_idx[4], slot_f_idx[4] = 1, 0, f2
        slot_dofs[0] = dof[ev[e, sve]]
        slot_dofs[1] = dof[ev[e, e1]]
        slot_dofs[2] = dof[ev[e, e2]]
        slot_dofs[3] = dof[ev[f, f1]]
        slot_dofs[4] = dof[ev[f, f2]]
        nt = _vertex_shells(ve, sve, Lv, shell_tris)
        _pair_xpolar(ve, vf, slot_c_mode, slot_e_idx, slot_f_idx, 5,
                     shell_tris[:nt], cx, cw, tx, tw, s, Sloc)
        for a in range(5):
            ia = slot_dofs[a]
            if ia < 0:
                continue
            for b in range(a, 5):
                ib = slot_dofs[b]
                if ib < 0:
                    continue
                v = 2.0 * factor * Sloc[a, b]
                if ia <= ib:
                    K[ia, ib] += v
                else:
                    K[ib, ia] += v


# ---------------------------------------------------------------------------
# disjoint pairs
# ---------------------------------------------------------------------------

@njit(cache=True, fastmath=True)
def disjoint_pairs(ev, dof, cent, rad,
                   pts0, wt0, lam0, pts1, wt1, lam1,
                   pts2, wt2, lam2, pts3, wt3, lam3,
                   mul0, mul1, mul2, s, factor, K):
    """All element pairs sharing no vertex, with distance-tiered orders.

    ``ptsT``: (m, kT, 2) physical quadrature points for tier T, ``wtT``
    the matching physical weights, ``lamT``: (kT, 3) reference barycentric
    values (element-independent).  A pair at centroid distance d with
    radius sum rho uses tier 0 when d <= mul0*rho, tier 1 when
    d <= mul1*rho, tier 2 when d <= mul2*rho, else tier 3.
    """
    m = ev.shape[0]
    kmax = pts0.shape[1]
    rs = np.empty(kmax)
    cs = np.empty(kmax)
    Bm = np.empty((3, 3))
    Ae = np.empty((3, 3))
    Fe = np.empty((3, 3))
    mexp = -1.0 - s
    for e in range(m):
        a0 = ev[e, 0]
        a1 = ev[e, 1]
        a2 = ev[e, 2]
        cex = cent[e, 0]
        cey = cent[e, 1]
        re = rad[e]
        de0 = dof[a0]
        de1 = dof[a1]
        de2 = dof[a2]
        e_all_bd = (de0 < 0) and (de1 < 0) and (de2 < 0)
        for f in range(e + 1, m):
            b0 = ev[f, 0]
            b1 = ev[f, 1]
            b2 = ev[f, 2]
            if (
                a0 == b0 or a0 == b1 or a0 == b2
                or a1 == b0 or a1 == b1 or a1 == b2
                or a2 == b0 or a2 == b1 or a2 == b2
            ):
                continue
            df0 = dof[b0]
            df1 = dof[b1]
            df2 = dof[b2]
            if e_all_bd and df0 < 0 and df1 < 0 and df2 < 0:
                continue
            dx = cex - cent[f, 0]
            dy = cey - cent[f, 1]
            dc = math.sqrt(dx * dx + dy * dy)
            rr = re + rad[f]
            if dc <= mul0 * rr:
                pe, we_, le = pts0[e], wt0[e], lam0
                pf, wf_, lf = pts0[f], wt0[f], lam0
            elif dc <= mul1 * rr:
                pe, we_, le = pts1[e], wt1[e], lam1
                pf, wf_, lf = pts1[f], wt1[f], lam1
            elif dc <= mul2 * rr:
                pe, we_, le = pts2[e], wt2[e], lam2
                pf, wf_, lf = pts2[f], wt2[f], lam2
            else:
                pe, we_, le = pts3[e], wt3[e], lam3
                pf, wf_, lf = pts3[f], wt3[f], lam3
            ke = pe.shape[0]
            kf = pf.shape[0]
            for i in range(3):
                for j in range(3):
                    Bm[i, j] = 0.0
                    Ae[i, j] = 0.0
                    Fe[i, j] = 0.0
            for h in range(kf):
                cs[h] = 0.0
            for g in range(ke):
                xg = pe[g, 0]
                yg = pe[g, 1]
                wg = we_[g]
                acc = 0.0
                v0 = 0.0
                v1 = 0.0
                v2 = 0.0
                for h in range(kf):
                    ddx = xg - pf[h, 0]
                    ddy = yg - pf[h, 1]
                    kern = wg * wf_[h] * (ddx * ddx + ddy * ddy) ** mexp
                    acc += kern
                    cs[h] += kern
                    v0 += kern * lf[h, 0]
                    v1 += kern * lf[h, 1]
                    v2 += kern * lf[h, 2]
                la0 = le[g, 0]
                la1 = le[g, 1]
                la2 = le[g, 2]
                Bm[0, 0] += la0 * v0
                Bm[0, 1] += la0 * v1
                Bm[0, 2] += la0 * v2
                Bm[1, 0] += la1 * v0
                Bm[1, 1] += la1 * v1
                Bm[1, 2] += la1 * v2
                Bm[2, 0] += la2 * v0
                Bm[2, 1] += la2 * v1
                Bm[2, 2] += la2 * v2
                Ae[0, 0] += acc * la0 * la0
                Ae[0, 1] += acc * la0 * la1
                Ae[0, 2] += acc * la0 * la2
                Ae[1, 1] += acc * la1 * la1
                Ae[1, 2] += acc * la1 * la2
                Ae[2, 2] += acc * la2 * la2
            for h in range(kf):
                ch = cs[h]
                lb0 = lf[h, 0]
                lb1 = lf[h, 1]
                lb2 = lf[h, 2]
                Fe[0, 0] += ch * lb0 * lb0
                Fe[0, 1] += ch * lb0 * lb1
                Fe[0, 2] += ch * lb0 * lb2
                Fe[1, 1] += ch * lb1 * lb1
                Fe[1, 2] += ch * lb1 * lb2
                Fe[2, 2] += ch * lb2 * lb2
            two_f = 2.0 * factor
            # e-e block
            for a in range(3):
                ia = dof[ev[e, a]]
                if ia < 0:
                    continue
                for b in range(a, 3):
                    ib = dof[ev[e, b]]
                    if ib < 0:
                        continue
                    v = two_f * Ae[a, b]
                    if ia <= ib:
                        K[ia, ib] += v
                    else:
                        K[ib, ia] += v
            # f-f block
            for a in range(3):
                ia = dof[ev[f, a]]
                if ia < 0:
                    continue
                for b in range(a, 3):
                    ib = dof[ev[f, b]]
                    if ib < 0:
                        continue
                    v = two_f * Fe[a, b]
                    if ia <= ib:
                        K[ia, ib] += v
                    else:
                        K[ib, ia] += v
            # cross block, sign -
            for a in range(3):
                ia = dof[ev[e, a]]
                if ia < 0:
                    continue
                for b in range(3):
                    ib = dof[ev[f, b]]
                    if ib < 0:
                        continue
                    v = -two_f * Bm[a, b]
                    if ia <= ib:
                        K[ia, ib] += v
                    else:
                        K[ib, ia] += v


# ---------------------------------------------------------------------------
# complement term
# ---------------------------------------------------------------------------

@njit(cache=True)
def complement_term(ev, coords, dof, cls, feat, corners,
                    s, L, px_pl, pw_pl, px_sh, pw_sh, tx, tw, factor, K):
    """Weighted L2 term with the complement weight rho(x).

    ``corners``: (nc+1, 2) closed counterclockwise loop of the domain's
    boundary corners (straight segments between consecutive corners).
    rho(x) is evaluated exactly in the radial direction (closed form out
    to the boundary along each ray) and by Gauss quadrature (tx, tw on
    [0, 1]) in the angle, per corner sector.  ``cls``: -1 skip (all
    vertices on the boundary), 0 plain interior element, 1 graded toward
    the boundary edge opposite local vertex ``feat``, 2 graded toward the
    boundary vertex at local position ``feat``.
    """
    m = ev.shape[0]
    nc = corners.shape[0] - 1
    nth = tx.shape[0]
    ve = np.empty((3, 2))
    lam = np.empty(3)
    grads = np.empty((3, 2))
    Sloc = np.empty((3, 3))
    shell_tris = np.empty((2 * L + 4, 6))
    inv2s = 1.0 / (2.0 * s)
    for t in range(m):
        c = cls[t]
        if c < 0:
            continue
        for k in range(3):
            ve[k, 0] = coords[ev[t, k], 0]
            ve[k, 1] = coords[ev[t, k], 1]
        if c == 0:
            ntri = 1
            shell_tris[0, 0], shell_tris[0, 1] = ve[0, 0], ve[0, 1]
            shell_tris[0, 2], shell_tris[0, 3] = ve[1, 0], ve[1, 1]
            shell_tris[0, 4], shell_tris[0, 5] = ve[2, 0], ve[2, 1]
        elif c == 1:
            ap = feat[t]
            ntri = _edge_shells(ve, ap, (ap + 1) % 3, (ap + 2) % 3, L,
                                shell_tris)
        else:
            ntri = _vertex_shells(ve, feat[t], L, shell_tris)
        if c == 0:
            cxq, cwq = px_pl, pw_pl
        else:
            cxq, cwq = px_sh, pw_sh
        kq = cxq.shape[0]
        for a in range(3):
            for b in range(3):
                Sloc[a, b] = 0.0
        for it in range(ntri):
            p0x, p0y = shell_tris[it, 0], shell_tris[it, 1]
            p1x, p1y = shell_tris[it, 2], shell_tris[it, 3]
            p2x, p2y = shell_tris[it, 4], shell_tris[it, 5]
            twoa = abs(
                (p1x - p0x) * (p2y - p0y) - (p1y - p0y) * (p2x - p0x)
            )
            if twoa < 1e-300:
                continue
            for iq in range(kq):
                xi1 = cxq[iq, 0]
                xi2 = cxq[iq, 1]
                x = p0x + xi1 * (p1x - p0x) + xi2 * (p2x - p0x)
                y = p0y + xi1 * (p1y - p0y) + xi2 * (p2y - p0y)
                wx = twoa * cwq[iq]
                _bary_and_grads(ve, lam, grads, x, y)
                # rho(x): per corner sector, Gauss in the angle with exact
                # radial integral r_exit^(-2s) / (2s)
                rho = 0.0
                phi_prev = math.atan2(corners[0, 1] - y, corners[0, 0] - x)
                for ic in range(nc):
                    phi_next = math.atan2(
                        corners[ic + 1, 1] - y, corners[ic + 1, 0] - x
                    )
                    dphi = phi_next - phi_prev
                    while dphi <= 0.0:
                        dphi += 2.0 * math.pi
                    dxseg = corners[ic + 1, 0] - corners[ic, 0]
                    dyseg = corners[ic + 1, 1] - corners[ic, 1]
                    for q in range(nth):
                        theta = phi_prev + dphi * tx[q]
                        uxd = math.cos(theta)
                        uyd = math.sin(theta)
                        denom = uxd * dyseg - uyd * dxseg
                        r = (
                            (corners[ic, 0] - x) * dyseg
                            - (corners[ic, 1] - y) * dxseg
                        ) / denom
                        rho += dphi * tw[q] * r ** (-2.0 * s)
                    phi_prev = phi_next
                rho *= inv2s
                wr = wx * rho
                Sloc[0, 0] += wr * lam[0] * lam[0]
                Sloc[0, 1] += wr * lam[0] * lam[1]
                Sloc[0, 2] += wr * lam[0] * lam[2]
                Sloc[1, 1] += wr * lam[1] * lam[1]
                Sloc[1, 2] += wr * lam[1] * lam[2]
                Sloc[2, 2] += wr * lam[2] * lam[2]
        for a in range(3):
            ia = dof[ev[t, a]]
            if ia < 0:
                continue
            for b in range(a, 3):
                ib = dof[ev[t, b]]
                if ib < 0:
                    continue
                v = factor * Sloc[a, b]
                if ia <= ib:
                    K[ia, ib] += v
                else:
                    K[ib, ia] += v
