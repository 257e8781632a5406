"""Regenerates ieee13.json: IEEE 13-node feeder topology with synthetic profiles.

Branch impedances are positive-sequence approximations of the IEEE 13-node
line configurations (4.16 kV, 1 MVA base). The daily profiles (heat loads,
base loads, prices, DRG, outdoor temperature) are synthetic: a morning wind
peak, an evening price peak and a mid-afternoon temperature peak.
"""
import json
import math

Z_BASE = 4.16**2 / 1.0
CONF = {  # ohm per mile, positive sequence (approximate)
    "601": (0.186, 0.597),
    "602": (0.592, 0.760),
    "603": (1.330, 1.350),
    "604": (1.330, 1.350),
    "605": (1.330, 1.350),
    "606": (0.800, 0.440),
    "607": (1.340, 0.510),
}
FT = 1.0 / 5280.0

# (id, parent, ieee name, conf or explicit pu impedance, length ft)
BRANCHES = [
    (1, 0, "632", "601", 2000),
    (2, 1, "633", "602", 500),
    (3, 2, "634", (0.022, 0.040), None),  # XFM-1 on 1 MVA base
    (4, 1, "645", "603", 500),
    (5, 4, "646", "603", 300),
    (6, 1, "671", "601", 2000),
    (7, 6, "680", "601", 1000),
    (8, 6, "684", "604", 300),
    (9, 8, "611", "605", 300),
    (10, 8, "652", "607", 800),
    (11, 6, "692", (0.0001, 0.0001), None),  # switch
    (12, 11, "675", "606", 500),
]

T = 24
V_MIN, V_MAX = 0.95**2, 1.05**2


def bump(t, centre, width):
    d = min(abs(t - centre), 24 - abs(t - centre))
    return math.exp(-0.5 * (d / width) ** 2)


def r6(v):
    return round(v, 6)


buses = [{"id": 0, "parent": None, "r": 0.0, "x": 0.0, "v_min_sq": r6(V_MIN), "v_max_sq": r6(V_MAX)}]
names = {0: "650"}
for bid, parent, name, conf, length in BRANCHES:
    if isinstance(conf, tuple):
        r, x = conf
    else:
        ro, xo = CONF[conf]
        r, x = ro * length * FT / Z_BASE, xo * length * FT / Z_BASE
    s_max = 5.0 if parent == 0 else 2.0  # feeder head segment is rated higher
    buses.append({"id": bid, "parent": parent, "r": r6(r), "x": r6(x),
                  "v_min_sq": r6(V_MIN), "v_max_sq": r6(V_MAX), "s_max": s_max})
    names[bid] = name

theta_out = [r6(29.0 + 4.0 * math.cos(2 * math.pi * (t - 15) / 24)) for t in range(T)]

buildings = []
for bid in range(1, 13):
    scale = 0.8 + 0.4 * ((bid * 37) % 11) / 10.0
    heat = [r6(scale * (0.02 + 0.03 * bump(t, 14, 4.0))) for t in range(T)]
    buildings.append({
        "bus": bid, "heat_capacity": 1.0, "thermal_resistance": 20.0, "cop": 3.6,
        "power_factor": 0.98, "p_max": 0.5, "theta_lo": 24.0, "theta_hi": 28.0,
        "heat_load": heat,
    })

base_loads = []
for bid in range(1, 13):
    if bid in (3, 11):
        continue
    scale = 0.6 + 0.8 * ((bid * 53) % 7) / 6.0
    p = [r6(scale * (0.05 + 0.03 * bump(t, 19, 3.0) + 0.015 * bump(t, 12, 3.0))) for t in range(T)]
    q = [r6(0.3 * v) for v in p]
    base_loads.append({"bus": bid, "p": p, "q": q})

drg = [
    {"name": "DRG1", "bus": 12, "nominal": [r6(0.4 + 2.0 * bump(t, 8, 3.0)) for t in range(T)]},
    {"name": "DRG2", "bus": 5, "nominal": [r6(0.3 + 1.8 * bump(t, 9, 3.5)) for t in range(T)]},
]

price_buy = [r6(45 + 15 * bump(t, 12, 3.0) + 110 * bump(t, 19, 1.8)) for t in range(T)]
price_sell = [r6(0.5 * p) for p in price_buy]

case = {
    "schema_version": 1,
    "name": "ieee13",
    "base_mva": 1.0,
    "slack_voltage_sq": 1.0,
    "dt_hours": 1.0,
    "horizon": T,
    "buses": buses,
    "buildings": buildings,
    "drg": drg,
    "base_loads": base_loads,
    "theta_out": theta_out,
    "price_buy": price_buy,
    "price_sell": price_sell,
    "notes": "IEEE 13-node topology (bus ids 0..12 map to "
    + ", ".join(f"{k}:{v}" for k, v in names.items())
    + "); all time series are synthetic.",
}

if __name__ == "__main__":
    import os
    here = os.path.dirname(os.path.abspath(__file__))
    with open(os.path.join(here, "ieee13.json"), "w") as f:
        json.dump(case, f, indent=1)
        f.write("\n")
