"""CSV dialect shared by the command-line tools and downstream figure scripts.

Comma-separated, dot decimal, UTF-8, '#' comment lines.  Every file carries
header comments with the config hash and seed; fitted constants go into
'# footer:' comments so the numeric body stays rectangular.  Floats are
written with a fixed 12-digit scientific format, which makes bodies
byte-identical across runs with the same inputs.
"""

import numpy as np


def _fmt(x):
    if isinstance(x, (int, np.integer)):
        return str(int(x))
    if isinstance(x, str):
        return x
    return f"{float(x):.12e}"


def write_csv(path, colnames, rows, comments=(), footers=()):
    with open(path, "w", encoding="utf-8") as f:
        for c in comments:
            f.write(f"# {c}\n")
        f.write(",".join(colnames) + "\n")
        for row in rows:
            f.write(",".join(_fmt(v) for v in row) + "\n")
        for key, val in footers:
            f.write(f"# footer: {key}={_fmt(val)}\n")


def read_csv(path):
    """Returns (comments, footers dict, colnames, rows as list of lists).

    Numeric fields are converted to float; others stay strings.
    """
    comments, footers, colnames, rows = [], {}, None, []
    with open(path, "r", encoding="utf-8") as f:
        for line in f:
            line = line.rstrip("\n")
            if not line.strip():
                continue
            if line.startswith("#"):
                body = line[1:].strip()
                if body.startswith("footer:"):
                    key, _, val = body[len("footer:"):].strip().partition("=")
                    try:
                        footers[key.strip()] = float(val)
                    except ValueError:
                        footers[key.strip()] = val
                else:
                    comments.append(body)
                continue
            parts = line.split(",")
            if colnames is None:
                colnames = parts
                continue
            row = []
            for p in parts:
                try:
                    row.append(float(p))
                except ValueError:
                    row.append(p)
            rows.append(row)
    if colnames is None:
        raise ValueError(f"{path}: no header row found")
    return comments, footers, colnames, rows


def column(colnames, rows, name):
    i = colnames.index(name)
    return np.array([r[i] for r in rows])
