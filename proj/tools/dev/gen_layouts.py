#!/usr/bin/env python3
"""Generates data/layouts.txt: 9x9 floorplans split into disjoint seen/unseen pools.

Legend: '#' wall, '.' floor, receptacles T table, C counter, K cabinet, H shelf,
S sink, M microwave, F fridge, L lamp. Every receptacle touches at least one
floor cell and all floor cells are connected.
"""
import random
import sys

SIZE = 9
RECEPTACLES = "TCKHSMFL"


def neighbors(r, c):
    for dr, dc in ((-1, 0), (1, 0), (0, -1), (0, 1)):
        yield r + dr, c + dc


def connected(grid):
    free = [(r, c) for r in range(SIZE) for c in range(SIZE) if grid[r][c] == "."]
    seen = {free[0]}
    stack = [free[0]]
    while stack:
        cell = stack.pop()
        for n in neighbors(*cell):
            if grid[n[0]][n[1]] == "." and n not in seen:
                seen.add(n)
                stack.append(n)
    return len(seen) == len(free)


def make(rng):
    while True:
        grid = [["#" if r in (0, SIZE - 1) or c in (0, SIZE - 1) else "." for c in range(SIZE)]
                for r in range(SIZE)]
        for _ in range(rng.randint(1, 3)):
            r, c = rng.randint(2, SIZE - 3), rng.randint(2, SIZE - 3)
            horizontal = rng.random() < 0.5
            for k in range(rng.randint(1, 3)):
                rr, cc = (r, c + k) if horizontal else (r + k, c)
                if 1 <= rr < SIZE - 1 and 1 <= cc < SIZE - 1:
                    grid[rr][cc] = "#"
        interior = [(r, c) for r in range(1, SIZE - 1) for c in range(1, SIZE - 1) if grid[r][c] == "."]
        rng.shuffle(interior)
        placed = 0
        for cell, rec in zip(interior, RECEPTACLES):
            grid[cell[0]][cell[1]] = rec
            placed += 1
        if placed < len(RECEPTACLES) or not connected(grid):
            continue
        ok = all(any(grid[n[0]][n[1]] == "." for n in neighbors(r, c))
                 for r in range(SIZE) for c in range(SIZE) if grid[r][c] in RECEPTACLES)
        if ok:
            return ["".join(row) for row in grid]


def main():
    rng = random.Random(int(sys.argv[1]) if len(sys.argv) > 1 else 2020)
    out = ["# Floorplans: '#' wall, '.' floor, T table, C counter, K cabinet, H shelf,",
           "# S sink, M microwave, F fridge, L lamp. Generated by tools/dev/gen_layouts.py.", ""]
    seen_grids = set()
    for pool, count in (("seen", 12), ("unseen", 6)):
        for i in range(count):
            while True:
                grid = make(rng)
                if tuple(grid) not in seen_grids:
                    seen_grids.add(tuple(grid))
                    break
            out.append(f"layout {pool}-{i:02d} {pool}")
            out.extend(grid)
            out.append("")
    sys.stdout.write("\n".join(out))


if __name__ == "__main__":
    main()
