# threshold mask stand-in for a pre-trained segmentation model
import sys

src, dst, t = sys.argv[1], sys.argv[2], float(sys.argv[3])
below = len(sys.argv) > 4 and sys.argv[4] == "below"
with open(src) as f:
    hdr_lines = [f.readline() for _ in range(6)]
    nodata = float(hdr_lines[5].split()[1])
    rows = int(hdr_lines[1].split()[1])
    grid = [[float(tok) for tok in f.readline().split()] for _ in range(rows)]
with open(dst, "w") as f:
    f.writelines(hdr_lines)
    for row in grid:
        out = []
        for v in row:
            if v == nodata:
                out.append(v)
            else:
                hit = v < t if below else v > t
                out.append(1.0 if hit else 0.0)
        f.write(" ".join("%.10g" % v for v in out) + "\n")
