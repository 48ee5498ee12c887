// Usage: node validate.js FILE...
// Prints one JSON line per file and exits 1 if any file has errors.
'use strict';

const fs = require('fs');
const path = require('path');
const validator = require('gltf-validator');

async function main(files) {
  let failed = 0;
  for (const file of files) {
    const report = await validator.validateBytes(new Uint8Array(fs.readFileSync(file)), {
      uri: path.basename(file),
      maxIssues: 100,
    });
    const issues = report.issues;
    const errors = issues.messages.filter((m) => m.severity === 0).map((m) => `${m.code} ${m.pointer || ''}: ${m.message}`);
    if (issues.numErrors > 0) failed++;
    console.log(JSON.stringify({ file, numErrors: issues.numErrors, numWarnings: issues.numWarnings, errors }));
  }
  process.exit(failed > 0 ? 1 : 0);
}

main(process.argv.slice(2)).catch((err) => {
  console.error(err);
  process.exit(2);
});
