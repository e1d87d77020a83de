"""Plain-loop space colonization used as an independent reference."""

import math


def naive_grow(width, height, roots, attractors, Da, Dk, Ls, N_max, T_max,
               per_attractor_normalize=False, nearest_only=False, obstacle=None):
    nodes = [(float(x), float(y), None) for x, y in roots]
    alive = [True] * len(attractors)

    def dist2(x, y, a):
        return (a[0] - x) ** 2 + (a[1] - y) ** 2

    def kill(idx):
        for j, a in enumerate(attractors):
            if alive[j] and any(dist2(nodes[i][0], nodes[i][1], a) <= Dk * Dk for i in idx):
                alive[j] = False

    kill(range(len(nodes)))
    t = 0
    while len(nodes) < N_max and t < T_max:
        infl = {}
        for j, a in enumerate(attractors):
            if not alive[j]:
                continue
            near = [i for i, (x, y, _) in enumerate(nodes) if dist2(x, y, a) <= Da * Da]
            if nearest_only and near:
                near = [min(near, key=lambda i: (dist2(nodes[i][0], nodes[i][1], a), i))]
            for i in near:
                infl.setdefault(i, []).append(j)
        new = []
        for i in sorted(infl):
            if len(nodes) >= N_max:
                break
            x, y, _ = nodes[i]
            sx = sy = 0.0
            for j in infl[i]:
                vx, vy = attractors[j][0] - x, attractors[j][1] - y
                if per_attractor_normalize:
                    n = math.hypot(vx, vy)
                    if n == 0:
                        continue
                    vx, vy = vx / n, vy / n
                sx += vx
                sy += vy
            norm = math.hypot(sx, sy)
            if norm < 1e-12:
                continue
            nx, ny = x + Ls * sx / norm, y + Ls * sy / norm
            if not (0 <= nx < width and 0 <= ny < height):
                continue
            if obstacle is not None:
                px = min(max(int(math.floor(nx + 0.5)), 0), width - 1)
                py = min(max(int(math.floor(ny + 0.5)), 0), height - 1)
                if obstacle[py][px]:
                    continue
            if any((nx - p[0]) ** 2 + (ny - p[1]) ** 2 <= 1e-12 for p in nodes):
                continue
            nodes.append((nx, ny, i))
            new.append(len(nodes) - 1)
        kill(new)
        if not new:
            break
        t += 1
    return nodes, alive, t
