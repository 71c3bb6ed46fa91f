export {
  COMM_SIZE,
  EmittedRecord,
  FaultEvent,
  RECORD_SIZE,
  RecordParseError,
  formatEventLine,
  packRecord,
  parseRecord,
  recordToEvent,
} from "./records";
export { ProbeConfig, ReferenceCounter, SubmitFn } from "./reference";
export {
  ATTACH_POINT,
  LoadOptions,
  LoadedProbe,
  PROBE_FN,
  ProbeUnsupportedError,
  loadProbe,
  probeSource,
} from "./loader";
