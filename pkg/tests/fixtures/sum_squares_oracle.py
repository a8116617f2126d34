import sys

for line in sys.stdin:
    xs = [float(v) for v in line.split()]
    print(repr(sum(v * v for v in xs)), flush=True)
