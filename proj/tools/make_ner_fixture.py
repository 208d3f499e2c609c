#!/usr/bin/env python3
# Copyright 2026 The cs-lab Authors.
#
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     http://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.
"""Writes the 20-sentence code-switched NER fixture and its embedding tables."""

import argparse
import pathlib
import random

PER = [["Alice"], ["Bob"], ["Carol", "Smith"], ["王伟"], ["李娜"], ["张", "敏"]]
LOC = [["Paris"], ["London"], ["New", "York"], ["北京"], ["上海"], ["东京"]]
ORG = [["Google"], ["Microsoft"], ["清华大学"], ["腾讯"], ["中国", "银行"]]

TEMPLATES = [
    "I met {PER} in {LOC}",
    "{PER} 在 {ORG} 工作",
    "我 昨天 去了 {LOC} , very nice",
    "{PER} works at {ORG} 在 {LOC}",
    "today {PER} 和 {PER} 去 {LOC}",
    "{ORG} 的 office is in {LOC}",
]


def lang(word):
    if any("一" <= ch <= "鿿" for ch in word):
        return "L2"
    if any(ch.isalpha() for ch in word):
        return "L1"
    return "OTHER"


def sentence(rng):
    out = []
    for piece in rng.choice(TEMPLATES).split():
        if piece.startswith("{"):
            cat = piece[1:-1]
            words = rng.choice({"PER": PER, "LOC": LOC, "ORG": ORG}[cat])
            out += [(w, ("B-" if i == 0 else "I-") + cat) for i, w in enumerate(words)]
        else:
            out.append((piece, "O"))
    return out


def table(words, dim, rng, header):
    lines = [f"{len(words)} {dim}"] if header else []
    for w in words:
        lines.append(w + " " + " ".join(f"{rng.gauss(0, 0.5):.6f}" for _ in range(dim)))
    return "\n".join(lines) + "\n"


def main():
    ap = argparse.ArgumentParser()
    ap.add_argument("--out", required=True)
    ap.add_argument("--seed", type=int, default=7)
    args = ap.parse_args()
    rng = random.Random(args.seed)
    out = pathlib.Path(args.out)
    out.mkdir(parents=True, exist_ok=True)
    sents = [sentence(rng) for _ in range(20)]
    with open(out / "train.conll", "w", encoding="utf-8") as f:
        for i, s in enumerate(sents):
            f.write(f"# id = ner{i}\n")
            for w, t in s:
                f.write(f"{w}\t{lang(w)}\t_\t{t}\n")
            f.write("\n")
    vocab = sorted({w for s in sents for w, _ in s})
    en = [w for w in vocab if lang(w) == "L1"]
    zh = [w for w in vocab if lang(w) == "L2"]
    (out / "en.vec").write_text(table(en, 12, rng, True), encoding="utf-8")
    (out / "zh.vec").write_text(table(zh, 12, rng, False), encoding="utf-8")
    en_sub = sorted({w[i:i + n] for w in en for n in (1, 2) for i in range(len(w) - n + 1)})
    zh_sub = sorted({ch for w in zh for ch in w})
    (out / "en.sub.vec").write_text(table(en_sub, 8, rng, False), encoding="utf-8")
    (out / "zh.sub.vec").write_text(table(zh_sub, 8, rng, False), encoding="utf-8")


if __name__ == "__main__":
    main()
