// Client-side validation of decisions documents against the schema the
// gateway serves (single schema source shared with the engine and CLI).
//
// This is a small interpreter for the draft-07 subset that schema
// actually uses: object/array/string types, required, properties,
// additionalProperties, items, enum, const, pattern, minLength and
// allOf/if/then. Good enough to refuse malformed documents before they
// ever reach the POST endpoint.

type Schema = Record<string, any>;

export interface SchemaViolation {
  path: string;
  message: string;
}

export function validateAgainstSchema(value: unknown, schema: Schema, path = '$'): SchemaViolation[] {
  const violations: SchemaViolation[] = [];

  if (schema.enum !== undefined) {
    if (!schema.enum.some((candidate: unknown) => deepEqual(candidate, value))) {
      violations.push({ path, message: `expected one of ${JSON.stringify(schema.enum)}` });
      return violations;
    }
  }
  if (schema.const !== undefined && !deepEqual(schema.const, value)) {
    violations.push({ path, message: `expected ${JSON.stringify(schema.const)}` });
    return violations;
  }

  switch (schema.type) {
    case 'object': {
      if (typeof value !== 'object' || value === null || Array.isArray(value)) {
        violations.push({ path, message: 'expected an object' });
        return violations;
      }
      const record = value as Record<string, unknown>;
      for (const key of schema.required ?? []) {
        if (!(key in record)) {
          violations.push({ path, message: `missing required property "${key}"` });
        }
      }
      const properties: Record<string, Schema> = schema.properties ?? {};
      for (const [key, child] of Object.entries(record)) {
        if (key in properties) {
          violations.push(...validateAgainstSchema(child, properties[key], `${path}.${key}`));
        } else if (schema.additionalProperties === false) {
          violations.push({ path, message: `unexpected property "${key}"` });
        } else if (typeof schema.additionalProperties === 'object') {
          violations.push(
            ...validateAgainstSchema(child, schema.additionalProperties, `${path}.${key}`),
          );
        }
      }
      break;
    }
    case 'array': {
      if (!Array.isArray(value)) {
        violations.push({ path, message: 'expected an array' });
        return violations;
      }
      if (schema.items) {
        value.forEach((item, index) => {
          violations.push(...validateAgainstSchema(item, schema.items, `${path}[${index}]`));
        });
      }
      break;
    }
    case 'string': {
      if (typeof value !== 'string') {
        violations.push({ path, message: 'expected a string' });
        return violations;
      }
      if (schema.minLength !== undefined && value.length < schema.minLength) {
        violations.push({ path, message: `shorter than minLength ${schema.minLength}` });
      }
      if (schema.pattern && !new RegExp(schema.pattern).test(value)) {
        violations.push({ path, message: `does not match ${schema.pattern}` });
      }
      break;
    }
    default:
      break;
  }

  for (const clause of schema.allOf ?? []) {
    if (clause.if && clause.then) {
      if (validateAgainstSchema(value, { type: schema.type, ...clause.if }, path).length === 0) {
        violations.push(...validateAgainstSchema(value, { type: schema.type, ...clause.then }, path));
      }
    } else {
      violations.push(...validateAgainstSchema(value, clause, path));
    }
  }

  return violations;
}

function deepEqual(a: unknown, b: unknown): boolean {
  return JSON.stringify(a) === JSON.stringify(b);
}
