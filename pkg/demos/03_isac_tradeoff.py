"""Narrowband ISAC: the PCRB / rate trade-off and scheme comparison.

Sweeps the communication rate target for the proposed optimizer and prints
the trade-off curve, then compares against the heuristic benchmark schemes
at the reference rate target.

Run:  python3 demos/03_isac_tradeoff.py        (a few minutes)
"""

import isac_beamkit as bk
from isac_beamkit.bench import Scheme, SchemeKind, run_scheme
from isac_beamkit.pcrb import PcrbEngine

print("PCRB versus rate target (proposed optimizer)")
for rate_bits in (2.0, 3.5, 4.5):
    sc = bk.default_scenario(rate_target_bits=rate_bits)
    rep = run_scheme(Scheme(SchemeKind.PROPOSED), sc,
                     ao_options={"n_init": 16, "max_outer": 5})
    print(f"  target {rate_bits:.1f} bps/Hz: PCRB {rep.final_pcrb:.4e}, "
          f"achieved {rep.final_rate/0.6931471805599453:.2f} bps/Hz")

print("\nscheme comparison at 4.5 bps/Hz")
sc = bk.default_scenario()
engine = PcrbEngine(sc)
for scheme in (
    Scheme(SchemeKind.FULLY_DIGITAL),
    Scheme(SchemeKind.PROPOSED),
    Scheme(SchemeKind.PARTIAL_PRIOR),
    Scheme(SchemeKind.DIRECTION_ALIGN),
    Scheme(SchemeKind.RANDOM_PHASE, 100),
):
    rep = run_scheme(scheme, sc, engine=engine,
                     ao_options={"n_init": 16, "max_outer": 5})
    print(f"  {scheme.label():20s} PCRB {rep.final_pcrb:.4e}  "
          f"rate {rep.final_rate/0.6931471805599453:.2f} bps/Hz")
