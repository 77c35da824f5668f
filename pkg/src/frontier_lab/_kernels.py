"""Compiled inner loops shared by the public modules.

Edge grids are flat int32 arrays holding two planes of W*W cells.  Plane 0
stores the horizontal edge (x, y)-(x+1, y) at cell (x, y); plane 1 stores the
vertical edge (x, y)-(x, y+1).  Cells are indexed with an offset ``off`` so
that lattice coordinate ``x`` lives at column ``x + off``.  An edge is present
when its cell equals the current stamp, which lets one buffer serve many
samples without clearing.
"""

import numpy as np
from numba import njit

# step codes 0:+x 1:-x 2:+y 3:-y (the WalkFile order)
CODE_DX = np.array([1, -1, 0, 0], dtype=np.int64)
CODE_DY = np.array([0, 0, 1, -1], dtype=np.int64)
# edge cell offset and plane for each step code, relative to the source vertex
CODE_EX = np.array([0, -1, 0, 0], dtype=np.int64)
CODE_EY = np.array([0, 0, 0, -1], dtype=np.int64)
CODE_PLANE = np.array([0, 0, 1, 1], dtype=np.int64)

# angular directions 0:E 1:N 2:W 3:S
ANG_DX = np.array([1, 0, -1, 0], dtype=np.int64)
ANG_DY = np.array([0, 1, 0, -1], dtype=np.int64)


@njit(cache=True)
def edge_index(x, y, ang, off, W):
    """Flat cell index of the edge leaving (x, y) in angular direction ang."""
    if ang == 0:
        return (x + off) * W + (y + off)
    if ang == 2:
        return (x - 1 + off) * W + (y + off)
    if ang == 1:
        return W * W + (x + off) * W + (y + off)
    return W * W + (x + off) * W + (y - 1 + off)


@njit(cache=True)
def walk_mark(gen, x0, y0, R2, budget, E, stamp, off, W):
    """Run a walk from (x0, y0) until x^2 + y^2 >= R2, stamping its edges.

    Returns (steps, x, y); steps is -1 when the budget ran out.
    """
    x = x0
    y = y0
    n = 0
    WW = W * W
    if x * x + y * y >= R2:
        return 0, x, y
    while True:
        w = gen.integers(0, 2**62)
        for k in range(31):
            d = (w >> (2 * k)) & 3
            E[CODE_PLANE[d] * WW + (x + CODE_EX[d] + off) * W + (y + CODE_EY[d] + off)] = stamp
            x += CODE_DX[d]
            y += CODE_DY[d]
            n += 1
            if x * x + y * y >= R2:
                return n, x, y
        if n > budget:
            return -1, x, y


@njit(cache=True)
def walk_record(gen, x0, y0, R2, budget, done, buf):
    """Record step codes into buf until exit; resumable across calls.

    ``done`` is the number of steps already taken.  Returns (status, count, x, y)
    where status is 0 on exit, 1 when buf filled up, 2 when the budget ran out.
    """
    x = x0
    y = y0
    cap = buf.shape[0]
    i = 0
    if x * x + y * y >= R2:
        return 0, 0, x, y
    while True:
        # pause only between words so no random bits are dropped
        if cap - i < 31:
            return 1, i, x, y
        w = gen.integers(0, 2**62)
        for k in range(31):
            d = (w >> (2 * k)) & 3
            buf[i] = d
            i += 1
            x += CODE_DX[d]
            y += CODE_DY[d]
            if x * x + y * y >= R2:
                return 0, i, x, y
            if done + i >= budget:
                return 2, i, x, y


@njit(cache=True)
def mark_codes(x0, y0, codes, i0, i1, E, stamp, off, W):
    """Stamp the edges of steps i0..i1-1 of a code sequence starting at (x0, y0).

    (x0, y0) must be the vertex before step i0.  Returns the vertex after i1-1.
    """
    x = x0
    y = y0
    WW = W * W
    for i in range(i0, i1):
        d = codes[i]
        E[CODE_PLANE[d] * WW + (x + CODE_EX[d] + off) * W + (y + CODE_EY[d] + off)] = stamp
        x += CODE_DX[d]
        y += CODE_DY[d]
    return x, y


@njit(cache=True)
def mark_vertices_path(xs, ys, i0, i1, E, stamp, off, W):
    """Stamp edges between consecutive vertices xs[i], xs[i+1] for i0 <= i < i1."""
    WW = W * W
    for i in range(i0, i1):
        x = xs[i]
        y = ys[i]
        dx = xs[i + 1] - x
        dy = ys[i + 1] - y
        if dx == 1:
            E[(x + off) * W + (y + off)] = stamp
        elif dx == -1:
            E[(x - 1 + off) * W + (y + off)] = stamp
        elif dy == 1:
            E[WW + (x + off) * W + (y + off)] = stamp
        else:
            E[WW + (x + off) * W + (y - 1 + off)] = stamp


@njit(cache=True)
def _next_dir(E, stamp, off, W, x, y, h):
    # right, straight, left, back relative to heading h
    for k in range(4):
        d = (h + 3 + k) & 3
        if E[edge_index(x, y, d, off, W)] == stamp:
            return d
    return -1


@njit(cache=True)
def trace_outer(E, stamp, off, W, sx, sy, back, V, vstamp, cbuf):
    """Trace the boundary of the unbounded face, keeping it on the right.

    ``back`` is an angular direction at (sx, sy) pointing into the unbounded
    face; the first edge is the first one met sweeping counterclockwise from
    it.  Vertices are written to cbuf[:, 0..L] (first = last) and stamped in V
    with vstamp.  Returns (L, distinct vertices), or (-1, 0) on overflow.
    """
    cap = cbuf.shape[1]
    x = sx
    y = sy
    nv = 0
    cbuf[0, 0] = x
    cbuf[1, 0] = y
    vi = (x + off) * W + (y + off)
    if V[vi] != vstamp:
        V[vi] = vstamp
        nv += 1
    d0 = _next_dir(E, stamp, off, W, x, y, (back + 2) & 3)
    if d0 < 0:
        return 0, nv
    d = d0
    L = 0
    while True:
        x += ANG_DX[d]
        y += ANG_DY[d]
        L += 1
        if L >= cap:
            return -1, 0
        cbuf[0, L] = x
        cbuf[1, L] = y
        vi = (x + off) * W + (y + off)
        if V[vi] != vstamp:
            V[vi] = vstamp
            nv += 1
        d = _next_dir(E, stamp, off, W, x, y, d)
        if x == sx and y == sy and d == d0:
            return L, nv


@njit(cache=True)
def outward_axis(x, y):
    """Axis direction with the largest component along (x, y)."""
    if abs(x) >= abs(y):
        return 0 if x >= 0 else 2
    return 1 if y > 0 else 3


@njit(cache=True)
def signed_area2(cbuf, L):
    """Twice the shoelace area of the closed contour cbuf[:, 0..L]."""
    a = 0
    for i in range(L):
        a += cbuf[0, i] * cbuf[1, i + 1] - cbuf[0, i + 1] * cbuf[1, i]
    return a


@njit(cache=True)
def disk_enclosed(cbuf, L, cx, cy, r):
    """True iff every unit face meeting the open disk D((cx, cy), r) has
    nonzero winding number with respect to the closed contour."""
    ir = int(np.ceil(r)) + 1
    ilo = int(np.floor(cx)) - ir
    ihi = int(np.floor(cx)) + ir
    jlo = int(np.floor(cy)) - ir
    jhi = int(np.floor(cy)) + ir
    nw = ihi - ilo + 2
    nh = jhi - jlo + 1
    cnt = np.zeros((nh, nw), dtype=np.int64)
    tail = np.zeros(nh, dtype=np.int64)
    for i in range(L):
        x = cbuf[0, i]
        if cbuf[0, i + 1] != x:
            continue
        y0 = cbuf[1, i]
        y1 = cbuf[1, i + 1]
        s = 1 if y1 > y0 else -1
        j = min(y0, y1)
        if j < jlo or j > jhi:
            continue
        if x > ihi + 1:
            tail[j - jlo] += s
        elif x > ilo:
            cnt[j - jlo, x - ilo] += s
    r2 = r * r
    for j in range(jlo, jhi + 1):
        # distance from the center to the row's y-interval
        dy = 0.0
        if cy < j:
            dy = j - cy
        elif cy > j + 1:
            dy = cy - (j + 1)
        acc = tail[j - jlo]
        for i in range(ihi, ilo - 1, -1):
            acc += cnt[j - jlo, i + 1 - ilo]
            dx = 0.0
            if cx < i:
                dx = i - cx
            elif cx > i + 1:
                dx = cx - (i + 1)
            if dx * dx + dy * dy < r2 and acc == 0:
                return False
    return True


@njit(cache=True)
def faces_reach_far(E, stamp, off, W, fi, fj, far2, F, fstamp, queue):
    """Breadth-first search over faces through unstamped edges.

    Starts from faces (fi[k], fj[k]); returns True as soon as a face whose
    center has squared norm > far2 is reached.  F is a face-visit buffer
    (W*W) stamped with fstamp; queue is scratch of length >= W*W.
    """
    WW = W * W
    head = 0
    tail = 0
    for k in range(fi.shape[0]):
        idx = (fi[k] + off) * W + (fj[k] + off)
        if F[idx] != fstamp:
            F[idx] = fstamp
            queue[tail] = idx
            tail += 1
    while head < tail:
        idx = queue[head]
        head += 1
        i = idx // W - off
        j = idx % W - off
        cxf = i + 0.5
        cyf = j + 0.5
        if cxf * cxf + cyf * cyf > far2:
            return True
        # east: vertical edge at x=i+1
        if E[WW + (i + 1 + off) * W + (j + off)] != stamp:
            n = idx + W
            if F[n] != fstamp:
                F[n] = fstamp
                queue[tail] = n
                tail += 1
        # west: vertical edge at x=i
        if E[WW + (i + off) * W + (j + off)] != stamp:
            n = idx - W
            if F[n] != fstamp:
                F[n] = fstamp
                queue[tail] = n
                tail += 1
        # north: horizontal edge at y=j+1
        if E[(i + off) * W + (j + 1 + off)] != stamp:
            n = idx + 1
            if F[n] != fstamp:
                F[n] = fstamp
                queue[tail] = n
                tail += 1
        # south: horizontal edge at y=j
        if E[(i + off) * W + (j + off)] != stamp:
            n = idx - 1
            if F[n] != fstamp:
                F[n] = fstamp
                queue[tail] = n
                tail += 1
    return False


@njit(cache=True)
def count_traversals(cbuf, L, cx, cy, r, R):
    """Number of crossings of the annulus r < |p - c| < R by the polyline
    cbuf[:, 0..L] (see grid_geometry.crossing_segments for the rule)."""
    r2 = r * r
    R2 = R * R
    last = 0  # 0 none, 1 inside, 2 outside
    count = 0
    for i in range(L + 1):
        px = cbuf[0, i] - cx
        py = cbuf[1, i] - cy
        d2 = px * px + py * py
        lab = 0
        if d2 <= r2:
            lab = 1
        elif d2 >= R2:
            lab = 2
        if lab != 0:
            if last != 0 and lab != last:
                count += 1
            last = lab
        if i == L:
            break
        qx = cbuf[0, i + 1] - cx
        qy = cbuf[1, i + 1] - cy
        ux = qx - px
        uy = qy - py
        a = ux * ux + uy * uy
        b = px * ux + py * uy
        # inner dip strictly inside the segment
        tmin = -b / a
        if 0.0 < tmin < 1.0:
            mx = px + tmin * ux
            my = py + tmin * uy
            if mx * mx + my * my <= r2:
                if last == 2:
                    count += 1
                last = 1
            # outside label is re-acquired only at vertices for unit segments
    return count


@njit(cache=True)
def count_box_vertices(V, vstamp, off, W, x0, x1, y0, y1):
    c = 0
    for x in range(x0, x1 + 1):
        for y in range(y0, y1 + 1):
            if V[(x + off) * W + (y + off)] == vstamp:
                c += 1
    return c


@njit(cache=True)
def probe_hits(V, vstamp, off, W, px, py, out):
    for k in range(px.shape[0]):
        if V[(px[k] + off) * W + (py[k] + off)] == vstamp:
            out[k] += 1


@njit(cache=True)
def pair_hits(V, vstamp, off, W, x0, x1, y0, y1, seps, single, both):
    """Count frontier hits in a box and axis-aligned pairs at each separation.

    single[0] += hits in the box; both[k] += pairs (z, z + s e) with both
    endpoints in the box and on the frontier, for e in {e_x, e_y}.
    """
    for x in range(x0, x1 + 1):
        for y in range(y0, y1 + 1):
            if V[(x + off) * W + (y + off)] != vstamp:
                continue
            single[0] += 1
            for k in range(seps.shape[0]):
                s = seps[k]
                if x + s <= x1 and V[(x + s + off) * W + (y + off)] == vstamp:
                    both[k] += 1
                if y + s <= y1 and V[(x + off) * W + (y + s + off)] == vstamp:
                    both[k] += 1


# ---------------------------------------------------------------- coupling

@njit(cache=True)
def exit_time_draw(gen, utab, umax):
    """Exit time of a standard BM from (-1, 1), by table inversion."""
    u = gen.random()
    if u < umax:
        pos = u / umax * (utab.shape[0] - 1)
        k = int(pos)
        if k >= utab.shape[0] - 1:
            return utab[-1]
        f = pos - k
        return utab[k] * (1.0 - f) + utab[k + 1] * f
    return 8.0 / np.pi**2 * np.log(4.0 / (np.pi * (1.0 - u)))


@njit(cache=True)
def _grow(a, n):
    b = np.empty(n, dtype=a.dtype)
    b[: a.shape[0]] = a
    return b


@njit(cache=True)
def _extend_crossings(gen, utab, umax, ct, cv, g, upto):
    """Append crossings g+1..upto (growing the arrays as needed)."""
    if upto >= ct.shape[0]:
        n = max(2 * ct.shape[0], upto + 1)
        ct = _grow(ct, n)
        cv = _grow(cv, n)
    for i in range(g + 1, upto + 1):
        u = gen.random()
        ct[i] = ct[i - 1] + exit_time_draw(gen, utab, umax)
        cv[i] = cv[i - 1] + (1 if u < 0.5 else -1)
    return ct, cv


@njit(cache=True)
def skeleton_coupling(gen, R, utab, umax, step_budget, record):
    """Skorokhod coupling driven by exact unit-crossing skeletons.

    Each coordinate is a BM observed at its successive unit-crossing times;
    between crossings it is represented by its last crossing level.  The walk
    takes its n-th step at time n/2 along a uniformly chosen coordinate, to
    that coordinate's next unused crossing level.

    Returns (max_dev, steps, end_time, status, codes, step_times, ev_t, ev_x,
    ev_y) with status 0 ok, 1 budget exhausted.  The step and event arrays are
    filled only when record is True.
    """
    R2 = R * R
    block = 4096
    ct1 = np.zeros(block)
    cv1 = np.zeros(block, dtype=np.int64)
    ct2 = np.zeros(block)
    cv2 = np.zeros(block, dtype=np.int64)
    g1 = 0  # highest generated crossing index
    g2 = 0
    n1 = 0  # crossings of W elapsed
    n2 = 0
    z1 = 0  # crossings consumed by S
    z2 = 0
    sx = 0
    sy = 0
    m = 0
    t = 0.0
    maxdev2 = 0
    rcap = 1024 if record else 1
    codes = np.empty(rcap, dtype=np.uint8)
    stimes = np.empty(rcap)
    ev_t = np.empty(rcap)
    ev_x = np.empty(rcap, dtype=np.int64)
    ev_y = np.empty(rcap, dtype=np.int64)
    ne = 0
    bits = 0
    nbits = 0
    while True:
        if g1 <= n1 or g1 <= z1:
            ct1, cv1 = _extend_crossings(gen, utab, umax, ct1, cv1, g1, g1 + block)
            g1 += block
        if g2 <= n2 or g2 <= z2:
            ct2, cv2 = _extend_crossings(gen, utab, umax, ct2, cv2, g2, g2 + block)
            g2 += block
        tstep = (m + 1) * 0.5
        tc1 = ct1[n1 + 1]
        tc2 = ct2[n2 + 1]
        done = False
        if tstep <= tc1 and tstep <= tc2:
            t = tstep
            m += 1
            if m > step_budget:
                return np.sqrt(maxdev2), m - 1, t, 1, codes[:0], stimes[:0], ev_t[:0], ev_x[:0], ev_y[:0]
            if nbits == 0:
                bits = int(gen.random() * 4503599627370496.0)
                nbits = 52
            j = bits & 1
            bits >>= 1
            nbits -= 1
            if j == 0:
                z1 += 1
                code = 0 if cv1[z1] > sx else 1
                sx = cv1[z1]
            else:
                z2 += 1
                code = 2 if cv2[z2] > sy else 3
                sy = cv2[z2]
            if record:
                if m > codes.shape[0]:
                    codes = _grow(codes, 2 * codes.shape[0])
                    stimes = _grow(stimes, 2 * stimes.shape[0])
                codes[m - 1] = code
                stimes[m - 1] = t
            done = sx * sx + sy * sy >= R2
        else:
            if tc1 < tc2:
                t = tc1
                n1 += 1
            else:
                t = tc2
                n2 += 1
            if record:
                if ne >= ev_t.shape[0]:
                    ev_t = _grow(ev_t, 2 * ev_t.shape[0])
                    ev_x = _grow(ev_x, 2 * ev_x.shape[0])
                    ev_y = _grow(ev_y, 2 * ev_y.shape[0])
                ev_t[ne] = t
                ev_x[ne] = cv1[n1]
                ev_y[ne] = cv2[n2]
                ne += 1
            done = cv1[n1] * cv1[n1] + cv2[n2] * cv2[n2] >= R2
        dx = cv1[n1] - sx
        dy = cv2[n2] - sy
        dev2 = dx * dx + dy * dy
        if dev2 > maxdev2:
            maxdev2 = dev2
        if done:
            return np.sqrt(maxdev2), m, t, 0, codes[:m], stimes[:m], ev_t[:ne], ev_x[:ne], ev_y[:ne]


@njit(cache=True)
def skeleton_deviation(gen, R, utab, umax, step_budget):
    """Same process as skeleton_coupling without recording.

    Returns (max_dev, steps, end_time, status).
    """
    R2 = R * R
    block = 4096
    ct1 = np.zeros(block)
    cv1 = np.zeros(block, dtype=np.int64)
    ct2 = np.zeros(block)
    cv2 = np.zeros(block, dtype=np.int64)
    g1 = 0
    g2 = 0
    n1 = 0
    n2 = 0
    z1 = 0
    z2 = 0
    sx = 0
    sy = 0
    m = 0
    t = 0.0
    maxdev2 = 0
    bits = 0
    nbits = 0
    while True:
        if g1 <= n1 or g1 <= z1:
            ct1, cv1 = _extend_crossings(gen, utab, umax, ct1, cv1, g1, g1 + block)
            g1 += block
        if g2 <= n2 or g2 <= z2:
            ct2, cv2 = _extend_crossings(gen, utab, umax, ct2, cv2, g2, g2 + block)
            g2 += block
        tstep = (m + 1) * 0.5
        tc1 = ct1[n1 + 1]
        tc2 = ct2[n2 + 1]
        if tstep <= tc1 and tstep <= tc2:
            t = tstep
            m += 1
            if m > step_budget:
                return np.sqrt(maxdev2), m - 1, t, 1
            if nbits == 0:
                bits = int(gen.random() * 4503599627370496.0)
                nbits = 52
            j = bits & 1
            bits >>= 1
            nbits -= 1
            if j == 0:
                z1 += 1
                sx = cv1[z1]
            else:
                z2 += 1
                sy = cv2[z2]
            done = sx * sx + sy * sy >= R2
        else:
            if tc1 < tc2:
                t = tc1
                n1 += 1
            else:
                t = tc2
                n2 += 1
            done = cv1[n1] * cv1[n1] + cv2[n2] * cv2[n2] >= R2
        dx = cv1[n1] - sx
        dy = cv2[n2] - sy
        dev2 = dx * dx + dy * dy
        if dev2 > maxdev2:
            maxdev2 = dev2
        if done:
            return np.sqrt(maxdev2), m, t, 0


@njit(cache=True)
def grid_coupling(gen, R, dt, max_grid, step_budget):
    """Skorokhod coupling on a dt-grid with interpolated unit crossings.

    Returns (max_dev, status, X, Y, ngrid, codes, step_times, cross_times)
    where X, Y are the coordinate grid paths (first ngrid samples valid),
    status 0 ok, 1 horizon exhausted.  The deviation is evaluated at grid
    times (W sampled) and step times (W linearly interpolated) up to the
    earlier exit time.
    """
    sq = np.sqrt(dt)
    R2 = R * R
    X = np.zeros(max_grid)
    Y = np.zeros(max_grid)
    gx = 1  # grid samples generated per coordinate
    gy = 1
    # crossings per coordinate: times and levels
    cx_t = np.zeros(1024)
    cx_v = np.zeros(1024, dtype=np.int64)
    cy_t = np.zeros(1024)
    cy_v = np.zeros(1024, dtype=np.int64)
    ncx = 1
    ncy = 1
    lvx = 0
    lvy = 0
    ptx = 0.0
    pvx = 0.0
    pty = 0.0
    pvy = 0.0
    codes = np.empty(1024, dtype=np.uint8)
    stimes = np.empty(1024)
    xtimes = np.empty(1024)
    zx = 0
    zy = 0
    sx = 0
    sy = 0
    m = 0
    bits = 0
    nbits = 0
    tau = -1.0
    while tau < 0.0:
        if nbits == 0:
            bits = gen.integers(0, 2**62)
            nbits = 62
        j = bits & 1
        bits >>= 1
        nbits -= 1
        m += 1
        if m > step_budget:
            return 0.0, 1, X, Y, 0, codes[:0], stimes[:0], xtimes[:0]
        if j == 0:
            zx += 1
            while ncx <= zx:
                if gx >= max_grid:
                    return 0.0, 1, X, Y, 0, codes[:0], stimes[:0], xtimes[:0]
                xn = X[gx - 1] + sq * gen.standard_normal()
                X[gx] = xn
                tn = gx * dt
                ptx = (gx - 1) * dt
                pvx = X[gx - 1]
                gx += 1
                while abs(xn - lvx) >= 1.0:
                    tgt = lvx + (1 if xn > lvx else -1)
                    tc = ptx + (tgt - pvx) / (xn - pvx) * (tn - ptx)
                    if ncx >= cx_t.shape[0]:
                        cx_t = _grow(cx_t, 2 * cx_t.shape[0])
                        cx_v = _grow(cx_v, 2 * cx_v.shape[0])
                    cx_t[ncx] = tc
                    cx_v[ncx] = tgt
                    ncx += 1
                    lvx = tgt
                    ptx = tc
                    pvx = tgt
            nxt = cx_v[zx]
            code = 0 if nxt > sx else 1
            sx = nxt
            ct = cx_t[zx]
        else:
            zy += 1
            while ncy <= zy:
                if gy >= max_grid:
                    return 0.0, 1, X, Y, 0, codes[:0], stimes[:0], xtimes[:0]
                yn = Y[gy - 1] + sq * gen.standard_normal()
                Y[gy] = yn
                tn = gy * dt
                pty = (gy - 1) * dt
                pvy = Y[gy - 1]
                gy += 1
                while abs(yn - lvy) >= 1.0:
                    tgt = lvy + (1 if yn > lvy else -1)
                    tc = pty + (tgt - pvy) / (yn - pvy) * (tn - pty)
                    if ncy >= cy_t.shape[0]:
                        cy_t = _grow(cy_t, 2 * cy_t.shape[0])
                        cy_v = _grow(cy_v, 2 * cy_v.shape[0])
                    cy_t[ncy] = tc
                    cy_v[ncy] = tgt
                    ncy += 1
                    lvy = tgt
                    pty = tc
                    pvy = tgt
            nxt = cy_v[zy]
            code = 2 if nxt > sy else 3
            sy = nxt
            ct = cy_t[zy]
        if m > codes.shape[0]:
            codes = _grow(codes, 2 * codes.shape[0])
            stimes = _grow(stimes, 2 * stimes.shape[0])
            xtimes = _grow(xtimes, 2 * xtimes.shape[0])
        codes[m - 1] = code
        stimes[m - 1] = m * 0.5
        xtimes[m - 1] = ct
        if sx * sx + sy * sy >= R2:
            tau = m * 0.5
    # extend both coordinates to cover [0, tau]
    need = int(np.ceil(tau / dt)) + 2
    if need > max_grid:
        return 0.0, 1, X, Y, 0, codes[:0], stimes[:0], xtimes[:0]
    while gx < need:
        X[gx] = X[gx - 1] + sq * gen.standard_normal()
        gx += 1
    while gy < need:
        Y[gy] = Y[gy - 1] + sq * gen.standard_normal()
        gy += 1
    ng = need
    # W exit on the grid
    tend = tau
    for i in range(ng):
        if X[i] * X[i] + Y[i] * Y[i] >= R2:
            if i * dt < tend:
                tend = i * dt
            break
    maxdev = 0.0
    # grid times
    k = 0
    cx = 0
    cy = 0
    for i in range(ng):
        ti = i * dt
        if ti > tend:
            break
        while k < m and stimes[k] <= ti:
            c = codes[k]
            if c == 0:
                cx += 1
            elif c == 1:
                cx -= 1
            elif c == 2:
                cy += 1
            else:
                cy -= 1
            k += 1
        dx = X[i] - cx
        dy = Y[i] - cy
        d = np.sqrt(dx * dx + dy * dy)
        if d > maxdev:
            maxdev = d
    # step times
    cx = 0
    cy = 0
    for k in range(m):
        ts = stimes[k]
        if ts > tend:
            break
        c = codes[k]
        if c == 0:
            cx += 1
        elif c == 1:
            cx -= 1
        elif c == 2:
            cy += 1
        else:
            cy -= 1
        p = ts / dt
        i = int(p)
        f = p - i
        wx = X[i] * (1.0 - f) + X[i + 1] * f
        wy = Y[i] * (1.0 - f) + Y[i + 1] * f
        dx = wx - cx
        dy = wy - cy
        d = np.sqrt(dx * dx + dy * dy)
        if d > maxdev:
            maxdev = d
    return maxdev, 0, X, Y, ng, codes[:m], stimes[:m], xtimes[:m]


@njit(cache=True)
def contour_histogram(cbuf, L, V, vstamp, off, W, R, cells, out):
    """Bin the distinct contour vertices with |v| <= R onto a cells x cells
    grid over [-R, R]^2.  Consumes the V stamps (they are flipped to -vstamp)."""
    R2 = R * R
    for i in range(L + 1):
        x = cbuf[0, i]
        y = cbuf[1, i]
        vi = (x + off) * W + (y + off)
        if V[vi] != vstamp:
            continue
        V[vi] = -vstamp
        if x * x + y * y > R2:
            continue
        bx = int((x + R) * cells // (2 * R))
        by = int((y + R) * cells // (2 * R))
        if bx >= cells:
            bx = cells - 1
        if by >= cells:
            by = cells - 1
        out[bx * cells + by] += 1
