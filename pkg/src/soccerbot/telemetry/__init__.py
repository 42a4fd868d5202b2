from .plotbuf import (DEFAULT_RATE, DEFAULT_RETENTION, OutOfWindowError,
                      PlotRecorder, PlotSeries, UnknownSeriesError)
from .bag import (BAG_VERSION, BagError, BagRecord, BagWriter, LogBag, MAGIC,
                  load_bag, record_topics, replay, save_bag)
from .gateway import PROTOCOL_VERSION, TelemetryGateway, jsonable

__all__ = [
    "DEFAULT_RATE", "DEFAULT_RETENTION", "OutOfWindowError", "PlotRecorder",
    "PlotSeries", "UnknownSeriesError",
    "BAG_VERSION", "BagError", "BagRecord", "BagWriter", "LogBag", "MAGIC",
    "load_bag", "record_topics", "replay", "save_bag",
    "PROTOCOL_VERSION", "TelemetryGateway", "jsonable",
]
