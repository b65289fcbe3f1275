#!/usr/bin/env python3
"""Generate the synthetic fixture corpus under fixtures/.

Deterministic: the same script version always writes the same bytes.
Usage: python3 scripts/make_fixtures.py [output_dir]
"""

import hashlib
import json
import os
import random
import sys

SEED = 20200311
N_PAPERS = 500

CITIES = [
    ("Wuhan", 30.5928, 114.3055), ("Beijing", 39.9042, 116.4074), ("Shanghai", 31.2304, 121.4737),
    ("Hong Kong", 22.3193, 114.1694), ("Tokyo", 35.6762, 139.6503), ("Seoul", 37.5665, 126.978),
    ("Singapore", 1.3521, 103.8198), ("Delhi", 28.7041, 77.1025), ("Mumbai", 19.076, 72.8777),
    ("Tehran", 35.6892, 51.389), ("Milan", 45.4642, 9.19), ("Rome", 41.9028, 12.4964),
    ("Madrid", 40.4168, -3.7038), ("Paris", 48.8566, 2.3522), ("London", 51.5074, -0.1278),
    ("Berlin", 52.52, 13.405), ("Stockholm", 59.3293, 18.0686), ("Moscow", 55.7558, 37.6173),
    ("New York", 40.7128, -74.006), ("Seattle", 47.6062, -122.3321), ("Boston", 42.3601, -71.0589),
    ("Toronto", 43.6532, -79.3832), ("Mexico City", 19.4326, -99.1332), ("Sao Paulo", -23.5505, -46.6333),
    ("Lima", -12.0464, -77.0428), ("Cape Town", -33.9249, 18.4241), ("Lagos", 6.5244, 3.3792),
    ("Nairobi", -1.2921, 36.8219), ("Cairo", 30.0444, 31.2357), ("Sydney", -33.8688, 151.2093),
    ("Melbourne", -37.8136, 144.9631), ("Auckland", -36.8485, 174.7633), ("Anchorage", 61.2181, -149.9003),
    ("Honolulu", 21.3069, -157.8583), ("Suva", -18.1248, 178.4501), ("Reykjavik", 64.1466, -21.9426),
    ("Istanbul", 41.0082, 28.9784), ("Bangkok", 13.7563, 100.5018), ("Jakarta", -6.2088, 106.8456),
    ("Manila", 14.5995, 120.9842),
]

ORGS = [
    "Wuhan University", "Tsinghua University Beijing", "Fudan University Shanghai", "University of Hong Kong",
    "University of Tokyo", "Seoul National University", "National University of Singapore",
    "All India Institute Delhi", "Tehran University of Medical Sciences", "University of Milan",
    "Sapienza University of Rome", "Complutense University of Madrid", "Institut Pasteur Paris",
    "Imperial College London", "Charite Berlin", "Karolinska Institute Stockholm", "Columbia University New York",
    "University of Washington Seattle", "Harvard Medical School Boston", "University of Toronto",
    "University of Sao Paulo", "University of Cape Town", "University of Lagos", "University of Sydney",
    "University of Melbourne", "University of Auckland", "Max Planck Institute", "Mayo Clinic",
    "Johns Hopkins University", "ETH Zurich", "University of Oxford", "Stanford University",
]

# (discipline index, vocabulary) for the topics papers and training docs are drawn from.
TOPICS = {
    10: "patients clinical vaccine hospital symptoms infection mortality treatment trial cohort dose "
        "antiviral ventilation outcomes diagnosis",
    13: "market unemployment prices income fiscal recession trade consumption firms wages demand "
        "inflation stimulus growth",
    7: "neural algorithm dataset model learning network prediction software classification deep "
       "training accuracy features computation",
    5: "protein genome sequence cell virus receptor gene mutation strain enzyme expression binding "
       "replication lineage",
    15: "social community policy households inequality governance public citizens trust migration "
        "families institutions survey welfare",
    16: "anxiety mental stress depression wellbeing loneliness sleep emotional cognitive behaviour "
        "resilience burnout mood coping",
    12: "students school teachers online learning classroom curriculum education remote assessment "
        "university pedagogy exams skills",
}
COMMON = "study results analysis data effect pandemic covid period during across evidence report".split()

# (id, name, discipline, source, description words)
ENTITIES = [
    ("herd_immunity", "herd immunity", 10, "glossary", "population immune fraction vaccination threshold transmission"),
    ("reproduction_number", "reproduction number", 10, "glossary", "basic secondary cases transmission epidemic growth"),
    ("contact_tracing", "contact tracing", 10, "glossary", "identify exposed contacts quarantine notification app"),
    ("viral_load", "viral load", 10, "glossary", "quantity virus sample swab copies infection severity"),
    ("cytokine_storm", "cytokine storm", 10, "glossary", "immune overreaction inflammation severe patients"),
    ("telemedicine", "telemedicine", 10, "wiki", "remote consultation doctors patients video care"),
    ("intensive_care", "intensive care", 10, "glossary", "icu beds ventilation critical patients hospital"),
    ("vaccine_hesitancy", "vaccine hesitancy", 10, "wiki", "reluctance refuse vaccination trust misinformation"),
    ("randomized_trial", "randomized controlled trial", 10, "glossary", "random assignment placebo treatment efficacy"),
    ("antibody_test", "antibody test", 10, "glossary", "serology antibodies blood prior infection prevalence"),
    ("spike_protein", "spike protein", 5, "discipline_kg", "surface glycoprotein receptor binding entry coronavirus"),
    ("ace2_receptor", "ACE2 receptor", 5, "discipline_kg", "angiotensin enzyme cell entry binding host"),
    ("genome_sequencing", "genome sequencing", 5, "glossary", "read nucleotide genome sequence variants"),
    ("viral_mutation", "viral mutation", 5, "glossary", "change genome strain variant lineage evolution"),
    ("phylogenetics", "phylogenetics", 5, "discipline_kg", "evolutionary tree lineage ancestry strains"),
    ("rna_virus", "RNA virus", 5, "discipline_kg", "ribonucleic genome replication polymerase"),
    ("supply_chain", "supply chain", 13, "glossary", "production logistics goods suppliers disruption trade"),
    ("stimulus_package", "stimulus package", 13, "glossary", "government spending relief fiscal support households"),
    ("unemployment_rate", "unemployment rate", 13, "glossary", "jobless workers labour force share"),
    ("stock_market", "stock market", 13, "wiki", "equity shares prices investors volatility"),
    ("remote_work", "remote work", 13, "wiki", "home office employees telework productivity"),
    ("oil_price", "oil price", 13, "glossary", "crude barrel energy demand shock"),
    ("machine_learning", "machine learning", 7, "discipline_kg", "algorithms data models prediction training"),
    ("deep_learning", "deep learning", 7, "discipline_kg", "neural layers network representation training"),
    ("knowledge_graph", "knowledge graph", 7, "discipline_kg", "entities relations graph linked data"),
    ("natural_language_processing", "natural language processing", 7, "discipline_kg", "text language models tokens corpus"),
    ("computer_vision", "computer vision", 7, "discipline_kg", "images detection segmentation scans"),
    ("mobility_data", "mobility data", 7, "glossary", "location phone movement traces flows"),
    ("social_distancing", "social distancing", 15, "glossary", "keep distance reduce contact gatherings"),
    ("lockdown_policy", "stay at home order", 15, "glossary", "confinement closure movement restriction government"),
    ("digital_divide", "digital divide", 15, "wiki", "unequal internet access technology households"),
    ("public_trust", "public trust", 15, "glossary", "confidence institutions government citizens"),
    ("misinformation", "misinformation", 15, "wiki", "false rumours social media infodemic"),
    ("mental_health", "mental health", 16, "glossary", "psychological wellbeing distress disorders"),
    ("loneliness", "loneliness", 16, "glossary", "isolation social connection alone feelings"),
    ("burnout", "burnout", 16, "glossary", "exhaustion workers stress healthcare staff"),
    ("sleep_quality", "sleep quality", 16, "glossary", "insomnia rest duration disturbance"),
    ("online_learning", "online learning", 12, "glossary", "virtual classes internet students platforms"),
    ("school_closure", "school closure", 12, "glossary", "schools closed pupils education disruption"),
    ("learning_loss", "learning loss", 12, "glossary", "achievement decline students skills gap"),
]

EXTERNAL = {
    "herd_immunity": "wikidata:Q1193979", "reproduction_number": "wikidata:Q901464",
    "telemedicine": "wikidata:Q1137587", "spike_protein": "wikidata:Q87637938",
    "machine_learning": "wikidata:Q2539", "deep_learning": "wikidata:Q197536",
    "knowledge_graph": "wikidata:Q33002955", "stock_market": "wikidata:Q475000",
    "mental_health": "wikidata:Q317309", "misinformation": "wikidata:Q13579947",
    "social_distancing": "wikidata:Q30314010", "online_learning": "wikidata:Q182250",
}
SUBCLASS = [
    ("deep_learning", "machine_learning"), ("computer_vision", "machine_learning"),
    ("natural_language_processing", "machine_learning"), ("burnout", "mental_health"),
    ("loneliness", "mental_health"), ("antibody_test", "randomized_trial"),
]

RELATION_VERBS = {
    "is_A": ["is a type of", "is a kind of", "is a form of", "is classified as"],
    "impact": ["reduces", "increases", "affects", "drives", "worsens"],
    "related_to": ["is associated with", "correlates with", "is linked to", "co-occurs with"],
    "unknown": ["and", "appears alongside", "was mentioned with", "or"],
}
FILLER = "in this study we observe that the during pandemic recent evidence suggests strongly".split()

FIRST = ("Wei Li Ana Maria José Chen Yuki Hana Omar Leila Ivan Olga John Mary Ahmed Fatima Carlos Lucia "
         "Raj Priya Kofi Amara Lars Ingrid Sven Marta Paolo Giulia Jan Eva Tomas Sofia Min Jun Hyun Ji").split()
LAST = ("Wang Zhang Liu Chen Yang Kim Park Tanaka Sato Silva Santos Garcia Rossi Bianchi Müller Schmidt "
        "Johansson Andersson Ivanov Smith Brown Jones Khan Patel Singh Okafor Mensah Haddad Nowak Novak "
        "Dubois Martin Lopez Gonzalez Costa Ferreira").split()
VENUES = ["The Lancet", "Nature Medicine", "BMJ", "PLOS ONE", "Journal of Economic Perspectives",
          "Science Advances", "Cell", "Computers in Human Behavior", "Social Science and Medicine",
          "Journal of Medical Internet Research"]
CONFERENCES = ["ACL Workshop on NLP for COVID", "KDD Health Day", "ICML Workshop on Pandemics"]
PREPRINTS = ["medRxiv", "bioRxiv", "arXiv"]
SOURCES = ["acemap", "cord19", "digsci", "preprint"]


def paper_id_for_doi(doi):
    """Same derivation as the fusion stage: hash of the normalized DOI key."""
    h = hashlib.sha256(b"doi" + b"\x1f" + doi.strip().lower().encode()).hexdigest()
    return h[:32]


def fold_accents(name):
    table = str.maketrans("áéíóúãõçñü", "aeiouaocnu")
    return name.translate(table)


def main(out):
    rng = random.Random(SEED)
    os.makedirs(os.path.join(out, "sources"), exist_ok=True)
    write = lambda name, text: open(os.path.join(out, name), "w", encoding="utf-8", newline="\n").write(text)

    write("gazetteer.tsv", "".join(f"{n}\t{lat}\t{lon}\n" for n, lat, lon in CITIES))

    # Authors with heavy-tailed productivity; each has a home organization.
    authors = []
    seen = set()
    while len(authors) < 700:
        name = f"{rng.choice(FIRST)} {rng.choice(LAST)}"
        if rng.random() < 0.3:
            name = f"{rng.choice(FIRST)} {rng.choice(FIRST)[0]}. {rng.choice(LAST)}"
        if name not in seen:
            seen.add(name)
            authors.append(name)
    home = {a: rng.choice(ORGS) for a in authors}
    weights = [1.0 / (r + 1) ** 0.9 for r in range(len(authors))]

    topics = sorted(TOPICS)
    ents_by_disc = {}
    for e in ENTITIES:
        ents_by_disc.setdefault(e[2], []).append(e)

    papers = []
    for i in range(N_PAPERS):
        disc = [rng.choice(topics)]
        if rng.random() < 0.25:
            disc.append(rng.choice([t for t in topics if t != disc[0]]))
        vocab = " ".join(TOPICS[d] for d in disc).split()
        ents = rng.sample(ents_by_disc[disc[0]], k=min(len(ents_by_disc[disc[0]]), rng.randint(1, 3)))
        cities = rng.sample(CITIES, k=rng.choice([0, 1, 1, 1, 2]))
        sentences = []
        for e in ents:
            words = rng.sample(vocab, 4)
            sentences.append(f"We examine {e[1]} and its role in {words[0]} {words[1]} and {words[2]} {words[3]}.")
        for c in cities:
            sentences.append(f"Data were collected in {c[0]} across {rng.choice(vocab)} {rng.choice(vocab)}.")
        if rng.random() < 0.15:
            sentences.append(f"The lockdown changed {rng.choice(vocab)} and {rng.choice(vocab)}.")
        sentences.append(" ".join(rng.sample(COMMON, 4)).capitalize() + ".")
        rng.shuffle(sentences)
        kind = rng.choices(["article", "proceeding", "preprint"], weights=[70, 10, 20])[0]
        venue = {"article": VENUES, "proceeding": CONFERENCES, "preprint": PREPRINTS}[kind]
        team = sorted(set(rng.choices(authors, weights=weights, k=rng.randint(2, 6))), key=authors.index)
        year = rng.choices([2019, 2020, 2021, 2022], weights=[5, 45, 40, 10])[0]
        has_doi = rng.random() > 0.06
        title_words = rng.sample(vocab, 3)
        title = f"{title_words[0].capitalize()} {title_words[1]} and {title_words[2]}"
        if cities and rng.random() < 0.4:
            title += f" in {cities[0][0]}"
        papers.append({
            "doi": f"10.5555/cov.{2020 + i % 3}.{i:05d}" if has_doi else None,
            "title": title,
            "abstract": " ".join(sentences),
            "year": year,
            "authors": team,
            "venue": rng.choice(venue),
            "type": kind,
            "entities": [e[0] for e in ents],
            "discipline": disc,
        })

    # Citations: later papers cite earlier ones, preferring already cited ones.
    cited_count = [1] * N_PAPERS
    for i, p in enumerate(papers):
        refs = []
        if i > 5:
            for _ in range(rng.randint(0, 8)):
                j = rng.choices(range(i), weights=cited_count[:i])[0]
                if papers[j]["doi"] and papers[j]["doi"] not in refs:
                    refs.append(papers[j]["doi"])
                    cited_count[j] += 1
        p["references"] = refs

    # Spread papers over feeds with overlaps and surface variation.
    feeds = {s: [] for s in SOURCES}
    conflicts = 0
    for i, p in enumerate(papers):
        if p["type"] == "preprint":
            where = ["preprint"] + (["cord19"] if rng.random() < 0.4 else [])
        else:
            where = rng.sample(["acemap", "cord19", "digsci"], k=rng.choices([1, 2, 3], weights=[50, 35, 15])[0])
        for k, s in enumerate(where):
            doi = p["doi"]
            if doi and k > 0 and rng.random() < 0.3:
                doi = rng.choice([f"https://doi.org/{doi}", doi.upper(), f"doi:{doi}"])
            year = p["year"]
            if doi and k > 0 and conflicts < 4 and rng.random() < 0.05:
                year += 1
                conflicts += 1
            names = [fold_accents(a) if rng.random() < 0.2 else a for a in p["authors"]]
            if k > 0 and rng.random() < 0.2:
                names = [n.upper() for n in names]
            rec = {
                "source": s,
                "id": f"{s[:2]}{len(feeds[s]):05d}",
                "title": p["title"] if k == 0 else p["title"].lower() if rng.random() < 0.3 else p["title"],
                "abstract": p["abstract"] if s != "digsci" or rng.random() < 0.5 else "",
                "year": year,
                "authors": names,
                "orgs": [home[a] for a in p["authors"]],
                "venue": p["venue"],
                "type": p["type"],
            }
            if doi:
                rec["doi"] = doi
            if p["references"]:
                rec["references"] = p["references"]
            feeds[s].append(json.dumps(rec, ensure_ascii=False, sort_keys=True))
    feeds["acemap"].insert(17, '{"source": "acemap", "id": "broken"')
    feeds["cord19"].insert(40, json.dumps({"source": "cord19", "id": "c-bad", "title": "", "year": 2020, "type": "article"}))
    feeds["digsci"].insert(5, json.dumps({"source": "digsci", "id": "d-bad", "title": "Old", "year": 1850, "type": "article"}))
    for s in SOURCES:
        write(f"sources/{s}.jsonl", "".join(line + "\n" for line in feeds[s]))

    # Glossary and external links.
    write("glossary.tsv", "".join(
        f"{eid}\t{name}\t{disc}\t{src}\t{name} {desc} {TOPICS[disc].split()[0]}\n"
        for eid, name, disc, src, desc in ENTITIES))
    links = [f"{k}\tsameAs\t{v}\n" for k, v in sorted(EXTERNAL.items())]
    links += [f"{a}\tsubClassOf\t{b}\n" for a, b in SUBCLASS]
    write("links.tsv", "".join(links))

    # Ranking annotations: mentioned entities are positive; same-discipline
    # entities that are not mentioned are negative. Two rounds; the second
    # revisits some papers of the first.
    with_doi = [p for p in papers if p["doi"]]
    annotated = rng.sample(with_doi, 180)
    rounds = [annotated[:120], annotated[100:]]
    for r, batch in enumerate(rounds, start=1):
        lines = []
        for p in batch:
            pid = paper_id_for_doi(p["doi"])
            pool = [e[0] for e in ents_by_disc[p["discipline"][0]] if e[0] not in p["entities"]]
            others = [e[0] for e in ENTITIES if e[0] not in p["entities"] and e[0] not in pool]
            negatives = rng.sample(pool, min(2, len(pool))) + rng.sample(others, 2)
            lines += [f"{pid}\t{e}\t1\n" for e in p["entities"]]
            lines += [f"{pid}\t{e}\t0\n" for e in negatives]
        write(f"annotations_round{r}.tsv", "".join(lines))

    # Classifier training documents.
    lines = []
    for i in range(400):
        labels = [rng.choice(topics)]
        if rng.random() < 0.2:
            labels.append(rng.choice([t for t in topics if t != labels[0]]))
        vocab = " ".join(TOPICS[d] for d in labels).split()
        title = " ".join(rng.sample(vocab, 3))
        body = " ".join(rng.choices(vocab, k=rng.randint(10, 18)) + rng.sample(COMMON, 3))
        lines.append(f"train{i:04d}\t{','.join(map(str, sorted(labels)))}\t{title}\t{body}\n")
    write("train_set.tsv", "".join(lines))

    # Relation annotations and open-domain triples share one sentence template.
    names = [e[1] for e in ENTITIES]
    def sentence(h, verb, t):
        pre = " ".join(rng.sample(FILLER, rng.randint(1, 4)))
        post = " ".join(rng.sample(COMMON, rng.randint(1, 3)))
        return f"{pre.capitalize()} {h} {verb} {t} {post}."

    labels = sorted(RELATION_VERBS)
    lines = []
    for _ in range(480):
        label = rng.choice(labels)
        h, t = rng.sample(names, 2)
        verb = rng.choice(RELATION_VERBS[label])
        lines.append(f"{h}\t{verb}\t{t}\t{label}\t{sentence(h, verb, t)}\n")
    write("relation_annotations.tsv", "".join(lines))

    lines = []
    for p in with_doi[:300]:
        pid = paper_id_for_doi(p["doi"])
        for _ in range(rng.randint(0, 2)):
            label = rng.choice(labels)
            verb = rng.choice(RELATION_VERBS[label])
            h, t = rng.sample(names, 2)
            if rng.random() < 0.15:
                h = rng.choice(["the economy", "our model", "patients"])
            lines.append(f"{pid}\t{h}\t{verb}\t{t}\t{sentence(h, verb, t)}\n")
    lines.append("bad line without fields\n")
    write("triples.tsv", "".join(lines))

    write("config.toml", """# Pipeline configuration for the shipped fixture corpus.
seed = 7
data_dir = "../data"

[inputs]
gazetteer = "gazetteer.tsv"
train_set = "train_set.tsv"
glossary = "glossary.tsv"
annotations = ["annotations_round1.tsv", "annotations_round2.tsv"]
triples = "triples.tsv"
relation_annotations = "relation_annotations.tsv"
links = "links.tsv"

[inputs.sources]
acemap = "sources/acemap.jsonl"
cord19 = "sources/cord19.jsonl"
digsci = "sources/digsci.jsonl"
preprint = "sources/preprint.jsonl"
""")


if __name__ == "__main__":
    main(sys.argv[1] if len(sys.argv) > 1 else os.path.join(os.path.dirname(__file__), "..", "fixtures"))
