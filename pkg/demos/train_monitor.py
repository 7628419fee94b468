"""Train line scenario: find the unsafe pair, widen its gap until the
margin turns positive, then stream a few cycles through the monitor."""

from lharv.cbtc import check_cycle, default_params, margin, monitor, safe_records, with_gap
from lharv.textio import format_record, format_verdict


def main():
    params = default_params(4, "unsafe")
    for front, rear in zip(params, params[1:]):
        print(f"{front.id}/{rear.id}: gap {front.x0 - rear.x0}, margin {margin(front, rear)}")

    result, pair, w, stats = check_cycle(params)
    print(f"\n{result} for {pair[0]}/{pair[1]} ({stats[0]} rows, {stats[1]} variables per pair system)")
    final = w.final_valuation()
    print(f"  both reach x = {final[pair[0] + '.x']} while braking")

    front, rear = params[2], params[3]
    gap = front.x0 - rear.x0 - margin(front, rear) + 1
    fixed = with_gap(params, 2, gap)
    print(f"\ngap set to {gap}: margin {margin(fixed[2], fixed[3])}, {check_cycle(fixed)[0]}")

    lines = [format_record(r) for r in safe_records(16, 5)]
    lines.insert(2, '{"cycle": 99, "timestamp": 1, "trains": []}')
    print("\nmonitor, 16 trains, deadline 500 ms:")
    for v in monitor(lines, 500):
        print("  " + format_verdict(v))


if __name__ == "__main__":
    main()
