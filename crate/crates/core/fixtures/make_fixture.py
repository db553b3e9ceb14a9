"""Regenerates the bundled pipeline fixture (transactions and price files).

    python3 make_fixture.py

Output is deterministic; the committed files are what the tests read.
"""

import datetime as dt
import math
import random

rng = random.Random(7)

POSITIVE = [
    "bitcoin price rally looks great, buy the dip and hold",
    "bullish market today, profit from the strong breakout",
    "happy to see ethereum gains, the trading volume is up",
    "good news for crypto investors, adoption is growing fast",
    "excellent returns this week, the exchange volume is amazing",
    "best bull run ever, hodl your coins and enjoy the profit",
    "the market is strong and the price keeps rising",
    "wonderful day for the blockchain, miners earn a great reward",
]
NEGATIVE = [
    "market crash is terrible, sell before the price drops",
    "bearish outlook, investors lose money on this bad trade",
    "the exchange hack was awful and the coin price collapsed",
    "worst week for crypto, panic selling and huge losses",
    "scam token stole funds, avoid this fraud at all cost",
    "sad to see the bitcoin price fall again, fear everywhere",
    "ugly dump today, the trading volume is weak and falling",
    "regulators ban crypto mining, the market is in trouble",
]
NEUTRAL = [
    "sending payment for the invoice",
    "wallet transfer to the exchange",
    "block reward for the miners",
    "token contract deployment",
]
# Texts exercising the cleanup filters; most do not survive.
NOISE = [
    "a",
    "==",
    "xxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxxx",
    "hola amigos que tal",
    "visit https://example.com for free coins",
    "3f9a2c7e1b4d8f0a6c5e",
    "lol gm wen moon",
]

START = dt.date(2021, 1, 1)
DAYS = 100


def op_return(text):
    data = text.encode()
    assert len(data) <= 75
    return "6a" + bytes([len(data)]).hex() + data.hex()


def coinbase(text):
    data = text.encode()
    return "03" + "a08601" + bytes([len(data)]).hex() + data.hex()


def tx_hash():
    return "".join(rng.choice("0123456789abcdef") for _ in range(64))


def stamp(day, seconds):
    t = dt.datetime.combine(day, dt.time()) + dt.timedelta(seconds=seconds)
    return t.strftime("%Y-%m-%dT%H:%M:%SZ")


def main():
    lines = []
    tone = []
    for d in range(DAYS):
        day = START + dt.timedelta(days=d)
        mood = rng.choice([1, 1, -1, -1, 0])
        tone.append(mood)
        for chain in ("btc", "eth"):
            pool = POSITIVE if mood > 0 else NEGATIVE if mood < 0 else NEUTRAL
            text = rng.choice(pool)
            if rng.random() < 0.12:
                text = rng.choice(NOISE)
            secs = rng.randrange(86400)
            if chain == "btc":
                if d % 10 == 0:
                    payload = ["coinbase_input", coinbase(text)]
                else:
                    payload = ["output_script", op_return(text)]
            else:
                payload = ["tx_input_data", text.encode().hex()]
            lines.append(
                '{"chain":"%s","hash":"%s","block_timestamp":"%s","payloads":[["%s","%s"]]}'
                % (chain, tx_hash(), stamp(day, secs), payload[0], payload[1])
            )
    # Unprintable payload and an empty payload list.
    lines.append(
        '{"chain":"btc","hash":"%s","block_timestamp":"%s","payloads":[["output_script","6a04deadbeef"]]}'
        % (tx_hash(), stamp(START, 100))
    )
    lines.append(
        '{"chain":"eth","hash":"%s","block_timestamp":"%s","payloads":[]}'
        % (tx_hash(), stamp(START, 200))
    )
    with open("transactions.ndjson", "w") as f:
        f.write("\n".join(lines) + "\n")

    for name, start_close, vol in (("btc", 29000.0, 0.03), ("eth", 730.0, 0.04)):
        close = start_close
        rows = ["Date,Close"]
        # Closes from the day before the first text to the day after the last.
        for d in range(-1, DAYS + 1):
            day = START + dt.timedelta(days=d)
            rows.append("%s,%.2f" % (day.isoformat(), close))
            drift = 0.6 * vol * tone[d] if 0 <= d < DAYS else 0.0
            close *= math.exp(drift + rng.gauss(0.0, vol))
        with open("prices_%s.csv" % name, "w") as f:
            f.write("\n".join(rows) + "\n")


if __name__ == "__main__":
    main()
