"""Regenerates corpus_48.jsonl: a small synthetic German corpus covering all strategies
and match types. Deterministic; the committed file is what the tests read."""
import json
import random

rng = random.Random(7)
subjects = ["Die Stadtverwaltung", "Der Gemeinderat", "Das Forschungsinstitut", "Die Bundesregierung",
            "Der Verein", "Die Universität", "Das Krankenhaus", "Die Feuerwehr"]
verbs = ["beschloss", "kündigte", "veröffentlichte", "untersuchte", "plante", "finanzierte"]
objects = ["umfangreiche Sanierungsmaßnahmen", "eine neue Verkehrsregelung", "den Ausbau der Radwege",
           "langfristige Klimaschutzprogramme", "die Modernisierung der Schulen", "zusätzliche Beratungsangebote"]
clauses = ["nachdem zahlreiche Bürgerinnen und Bürger wiederholt Beschwerden eingereicht hatten",
           "obwohl die finanziellen Mittel ausgesprochen knapp bemessen waren",
           "weil die bisherigen Regelungen als unzureichend empfunden wurden",
           "während gleichzeitig umfangreiche Bauarbeiten im Stadtzentrum stattfanden"]
short = {"umfangreiche Sanierungsmaßnahmen": "viele Reparaturen", "eine neue Verkehrsregelung": "neue Regeln für den Verkehr",
         "den Ausbau der Radwege": "mehr Radwege", "langfristige Klimaschutzprogramme": "Pläne für das Klima",
         "die Modernisierung der Schulen": "neue Schulen", "zusätzliche Beratungsangebote": "mehr Beratung"}
match_types = ["Complex-B1-A2", "Complex-B1", "B1-A2", "Complex-A2"]

with open("corpus_48.jsonl", "w", encoding="utf-8") as f:
    for i in range(48):
        s, v, o, c = rng.choice(subjects), rng.choice(verbs), rng.choice(objects), rng.choice(clauses)
        complex_ = f"{s} {v} {o}, {c}."
        kind = i % 3
        if kind == 0:  # split
            simple = f"{s} {v} {short[o]}. Vorher gab es viele Beschwerden. Das Geld war knapp."
        elif kind == 1:  # delete
            simple = f"{s} {v} {o}."
        else:  # paraphrase
            simple = f"{s} hat {short[o]} gemacht, {c}."
        mt = match_types[(i // 3) % 4]
        refs = []
        if mt in ("Complex-B1-A2", "Complex-B1"):
            refs.append({"level": "B1", "text": f"{s} {v} {short[o]}, {c}."})
        if mt in ("Complex-B1-A2", "B1-A2", "Complex-A2"):
            refs.append({"level": "A2", "text": simple})
        if mt == "Complex-B1":
            refs[0]["text"] = simple
        f.write(json.dumps({"id": f"r{i:03d}", "complex": complex_, "references": refs, "match_type": mt},
                           ensure_ascii=False) + "\n")
