#!/usr/bin/env python3
# Copyright 2026 The fneval Authors.
# Licensed under the Apache License, Version 2.0 (the "License");
# you may not use this file except in compliance with the License.
# You may obtain a copy of the License at
#
#     https://www.apache.org/licenses/LICENSE-2.0
#
# Unless required by applicable law or agreed to in writing, software
# distributed under the License is distributed on an "AS IS" BASIS,
# WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
# See the License for the specific language governing permissions and
# limitations under the License.

"""Regenerates the bundled sample data. Output is deterministic."""

import json
import os
import random

HERE = os.path.dirname(os.path.abspath(__file__))


def write_run(path, system, lists):
    with open(path, "w") as out:
        for query in sorted(lists):
            for rank, item in enumerate(lists[query], start=1):
                out.write(f"{query} {item} {rank} {1.0 - rank / 100:.2f} {system}\n")


def write_qrels(path, labels):
    with open(path, "w") as out:
        for (query, item) in sorted(labels):
            relevant, source = labels[(query, item)]
            out.write(f"{query} {item} {1 if relevant else 0} {source}\n")


def bench():
    """1,000 queries, one original positive each, two systems at depth 10.

    sysA: 424 original hits at rank 1, 250 more rank-1 items found relevant by
    pooling, 6 of which sysB also retrieved. sysB: 233 original hits, 6 shared
    plus 2 pooled positives of its own.
    """
    rng = random.Random(20260101)
    out_dir = os.path.join(HERE, "bench")
    os.makedirs(out_dir, exist_ok=True)
    queries = [f"q{i:04d}" for i in range(1000)]
    gt = {q: f"v{i:04d}" for i, q in enumerate(queries)}
    fillers = [f"v{i:04d}" for i in range(1000)] + [f"e{i:04d}" for i in range(2000)]

    hits_a = set(queries[:424])
    pooled_a = queries[424:674]
    shared = set(queries[424:430])
    own_b = {"q0900", "q0901"}
    candidates = [q for q in queries if q not in shared and q not in own_b]
    hits_b = set(rng.sample(candidates, 233))

    def filled(query, head, length=10):
        items = list(head)
        while len(items) < length:
            item = rng.choice(fillers)
            if item != gt[query] and item not in items:
                items.append(item)
        return items

    run_a, run_b = {}, {}
    for q in queries:
        if q in hits_a:
            head = [gt[q]]
        elif q in pooled_a:
            head = [f"p{q[1:]}"]
        else:
            head = [rng.choice([f for f in fillers[:50] if f != gt[q]])]
        items = filled(q, head)
        if q not in hits_a and rng.random() < 0.6:
            items[rng.randrange(1, 10)] = gt[q]
        run_a[q] = items

        if q in hits_b:
            head = [gt[q]]
        elif q in shared:
            head = [f"p{q[1:]}"]
        elif q in own_b:
            head = [f"b{q[1:]}"]
        else:
            head = [rng.choice([f for f in fillers[50:100] if f != gt[q]])]
        items = filled(q, head)
        if q not in hits_b and rng.random() < 0.5:
            items[rng.randrange(1, 10)] = gt[q]
        run_b[q] = items

    write_run(os.path.join(out_dir, "sysA.run"), "sysA", run_a)
    write_run(os.path.join(out_dir, "sysB.run"), "sysB", run_b)

    original = {(q, gt[q]): (True, "original") for q in queries}
    write_qrels(os.path.join(out_dir, "original.qrels"), original)

    contributors = {}
    for system, run in (("sysA", run_a), ("sysB", run_b)):
        for q, items in run.items():
            for item in items:
                if (q, item) not in original:
                    contributors.setdefault((q, item), set()).add(system)
    pooled = {}
    for (q, item), systems in contributors.items():
        relevant = item in (f"p{q[1:]}", f"b{q[1:]}")
        pooled[(q, item)] = (relevant, "pooled:" + ",".join(sorted(systems)))
    write_qrels(os.path.join(out_dir, "pooled.qrels"), pooled)
    corrected = dict(original)
    corrected.update(pooled)
    write_qrels(os.path.join(out_dir, "corrected.qrels"), corrected)


SUBJECTS = ["a man", "a woman", "a child", "two dogs", "a chef", "a band", "a cat", "a group of people",
            "a girl", "a boy", "a cyclist", "a news anchor"]
ACTIONS = ["is cooking pasta", "plays the guitar", "runs along", "is talking", "dances", "swims",
           "rides a bike", "reads a book", "paints a fence", "is singing", "jumps", "laughs"]
PLACES = ["in a kitchen", "on a beach", "in a park", "on stage", "in the rain", "at night",
          "in a studio", "on a street", "in a classroom", "near a lake"]


def demo():
    """Small collection for trying the CLI and the annotation service."""
    rng = random.Random(7)
    out_dir = os.path.join(HERE, "demo")
    os.makedirs(out_dir, exist_ok=True)

    def caption():
        text = f"{rng.choice(SUBJECTS)} {rng.choice(ACTIONS)}"
        if rng.random() < 0.7:
            text += f" {rng.choice(PLACES)}"
        if rng.random() < 0.3:
            text += f" while {rng.choice(SUBJECTS)} {rng.choice(ACTIONS)}"
        return text

    test = [f"t{i:02d}" for i in range(20)]
    train = [f"r{i:02d}" for i in range(60)]
    with open(os.path.join(out_dir, "queries.tsv"), "w") as out:
        for q in train:
            out.write(f"{q}\ttrain\t{caption()}\n")
        for q in test:
            out.write(f"{q}\ttest\t{caption()}\n")

    items = [f"clip{i:03d}" for i in range(120)]
    with open(os.path.join(out_dir, "items.txt"), "w") as out:
        for item in items:
            out.write(item + "\n")

    gt = {q: items[i] for i, q in enumerate(test)}
    original = {(q, gt[q]): (True, "original") for q in test}
    write_qrels(os.path.join(out_dir, "original.qrels"), original)

    # Hidden truth: a few extra relevant clips per query.
    truth = {q: {gt[q]} | set(rng.sample(items[20:], rng.randrange(0, 4))) for q in test}
    shown = set()
    for name, skill in (("sysA", 0.6), ("sysB", 0.45), ("sysC", 0.3)):
        lists = {}
        for q in test:
            relevant = list(truth[q])
            rng.shuffle(relevant)
            ranked = []
            for item in relevant:
                if rng.random() < skill:
                    ranked.append(item)
            while len(ranked) < 10:
                item = rng.choice(items)
                if item not in ranked:
                    ranked.append(item)
            lists[q] = ranked
            shown.update((q, item) for item in ranked)
        write_run(os.path.join(out_dir, f"{name}.run"), name, lists)

    # What each rater answers for every (query, clip) pair they might be shown.
    with open(os.path.join(out_dir, "answers.tsv"), "w") as out:
        for q, item in sorted(shown):
            for rater in ("ann1", "ann2", "ann3"):
                relevant = item in truth[q]
                roll = rng.random()
                if roll < 0.02:
                    label = "escalated"
                else:
                    flip = roll < 0.12
                    label = "relevant" if relevant != flip else "irrelevant"
                out.write(f"{q}\t{item}\t{rater}\t{label}\n")


if __name__ == "__main__":
    bench()
    demo()
