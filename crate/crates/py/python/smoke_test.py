"""Smoke test for the cda_arena extension module.

Build and install first, e.g. `maturin develop -m crates/py/Cargo.toml`,
then run `python crates/py/python/smoke_test.py`.
"""

import json

import cda_arena


def main():
    book = cda_arena.OrderBook(2)
    assert book.submit(0, "BID", 30.00) == []
    assert book.best_bid == (30.0, 1)
    fills = book.submit(1, "ASK", 29.50)
    assert fills == [(30.0, 1, 0, 1)], fills
    assert book.best_bid is None and book.microprice is None

    eq = cda_arena.equilibrium([45, 43, 41], [15, 17, 19])
    assert eq["quantity"] == 3 and eq["price"] == 30.0, eq

    assert len(cda_arena.enumerate_ratios(4, 16)) == 969
    u, p_two, p_greater = cda_arena.u_test([1, 2, 3], [10, 11, 12])
    assert u == 0.0 and abs(p_two - 0.1) < 1e-12

    cfg = cda_arena.Config(overrides=["market.n_days=2", "roster.buyers=GDX:8,ZIC:8", "roster.sellers=AA:8,ZIC:8"])
    assert cfg.sweep_plan().startswith("969 ratios")
    result = cda_arena.run_session(cfg)
    again = cda_arena.run_session(cfg)
    assert result.to_json() == again.to_json()
    record = json.loads(result.to_json())
    assert record["market"] == "M1" and result.n_trades > 0
    print(f"ok: {result.n_trades} trades, AE {result.ae_global:.1f}, by strategy {dict(result.ae_by_strategy())}")


if __name__ == "__main__":
    main()
