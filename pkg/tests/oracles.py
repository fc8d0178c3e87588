"""Independent reference computations with plain Python integers."""


def eta_form(prec):
    """q prod (1 - q^m)^4 (1 - q^5m)^4: the weight 4 newform of level 5."""
    c = [0] * prec
    c[1] = 1
    for m in range(1, prec):
        for step in (m, 5 * m):
            if step >= prec:
                continue
            for _ in range(4):
                for i in range(prec - 1, step - 1, -1):
                    c[i] -= c[i - step]
    return c


def delta_coeffs(prec):
    """q prod (1 - q^m)^24."""
    c = [0] * prec
    c[1] = 1
    for m in range(1, prec):
        for _ in range(24):
            for i in range(prec - 1, m - 1, -1):
                c[i] -= c[i - m]
    return c
