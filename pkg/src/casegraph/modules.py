"""Built-in analysis modules.

The speaker and transcription modules are scripted stand-ins implementing
the plugin contract over a mock audio payload (JSON with per-speaker text);
the entity module runs the deterministic gazetteer extractor. Together they
realize the audio -> speakers -> transcript -> entities cascade.
"""

from __future__ import annotations

import json

from casegraph import ner
from casegraph.orchestration import CandidateEdge, CandidateNode, ModuleContext, ModuleDescriptor, RunResult
from casegraph.schema import ConfidenceGrade

SPEAKER_MODULE_ID = "speaker-detection"
TRANSCRIPTION_MODULE_ID = "transcription"
NER_MODULE_ID = "entity-extraction"


class SpeakerDetectionModule:
    """Detects speakers in mock audio and emits a speaker-separated track.

    Mock audio payload: JSON {"speakers": {"name": "spoken text", ...}}.
    The selected_speakers parameter drops speakers before resynthesis.
    """

    descriptor = ModuleDescriptor(
        module_id=SPEAKER_MODULE_ID,
        ingest_types=["audio/*"],
        context_actions=[
            {"action": "show-speakers", "label": "Show detected speakers", "target_type": "Thing/Document/Audio"}
        ],
        preview_handlers={"Thing/Document/Audio": "audio-player"},
    )

    def run(self, ctx: ModuleContext) -> RunResult:
        payload = json.loads(ctx.read_source_bytes().decode("utf-8"))
        speakers = payload.get("speakers", {})
        selected = ctx.params.get("selected_speakers")
        if selected is None:
            selected = sorted(speakers)
        else:
            unknown = set(selected) - set(speakers)
            if unknown:
                raise ValueError(f"unknown speakers {sorted(unknown)}")
            selected = sorted(selected)
        kept = {name: speakers[name] for name in selected}
        result = RunResult()
        track_key = "track"
        result.nodes.append(
            CandidateNode(
                key=track_key,
                type="Thing/Document/SpeakerAudio",
                label=f"speaker audio of {ctx.source_doc_id} [{','.join(selected)}]",
                attributes={
                    "speakers": json.dumps(kept, sort_keys=True),
                    "selected_speakers": ",".join(selected),
                    "media_type": "audio/x-speaker-separated",
                },
            )
        )
        result.edges.append(CandidateEdge("derived_from", track_key, ctx.source_doc_id))
        for name in sorted(speakers):
            key = f"speaker:{name}"
            result.nodes.append(CandidateNode(key=key, type="Thing/Entity/Speaker", label=name))
            result.edges.append(
                CandidateEdge("mentioned_in", key, ctx.source_doc_id, grade=ConfidenceGrade("C", 3))
            )
        return result


class TranscriptionModule:
    """Turns a speaker-separated track into a transcript document."""

    descriptor = ModuleDescriptor(
        module_id=TRANSCRIPTION_MODULE_ID,
        listeners=[{"type": "Thing/Document/SpeakerAudio", "mutation": "create_node"}],
        preview_handlers={"Thing/Document/Transcript": "text-viewer"},
    )

    def run(self, ctx: ModuleContext) -> RunResult:
        track = ctx.trigger_node()
        speakers = json.loads(track.attributes["speakers"])
        text = "\n".join(f"{name}: {speakers[name]}" for name in sorted(speakers))
        result = RunResult()
        result.nodes.append(
            CandidateNode(
                key="transcript",
                type="Thing/Document/Transcript",
                label=f"transcript of {ctx.trigger_item_id}",
                attributes={"text": text, "media_type": "text/plain"},
            )
        )
        result.edges.append(CandidateEdge("derived_from", "transcript", ctx.trigger_item_id))
        return result


class EntityExtractionModule:
    """Gazetteer/rule entity extraction over text and transcript documents."""

    def __init__(self, gazetteer: ner.Gazetteer):
        self.gazetteer = gazetteer

    descriptor = ModuleDescriptor(
        module_id=NER_MODULE_ID,
        ingest_types=["text/plain"],
        listeners=[
            {"type": "Thing/Document/Transcript", "mutation": "create_node"},
            {"type": "Thing/Document/Text", "mutation": "create_node"},
        ],
        context_actions=[
            {"action": "show-mentions", "label": "Show mentions in documents", "target_type": "Thing/Entity"}
        ],
    )

    def run(self, ctx: ModuleContext) -> RunResult:
        doc = ctx.trigger_node()
        text = doc.attributes.get("text", "")
        mentions = ner.extract(text, self.gazetteer)
        result = RunResult()
        seen: set[tuple[str, str]] = set()
        for i, mention in enumerate(mentions):
            type_path = ner.LABEL_TO_TYPE[mention.label]
            key = f"{type_path}|{ner.normalize_term(mention.surface)}"
            if (type_path, key) not in seen:
                seen.add((type_path, key))
                attributes = {}
                if mention.label == "DATETIME":
                    interval = ner.parse_datetime_interval(mention.surface)
                    if interval is not None:
                        attributes["interval"] = list(interval)
                result.nodes.append(
                    CandidateNode(key=key, type=type_path, label=mention.surface, attributes=attributes)
                )
            result.edges.append(
                CandidateEdge(
                    "mentioned_in",
                    key,
                    ctx.trigger_item_id,
                    grade=ConfidenceGrade("C", 2),
                    attributes={
                        "start": mention.start,
                        "end": mention.end,
                        "label": mention.label,
                        "surface": mention.surface,
                    },
                )
            )
        return result


def default_modules(gazetteer: ner.Gazetteer):
    return [SpeakerDetectionModule(), TranscriptionModule(), EntityExtractionModule(gazetteer)]
