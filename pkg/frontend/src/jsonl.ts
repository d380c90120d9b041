// Text batch files: JSON lines of {entity_id, text_kind, text}.

export type TextKind = 'tweet' | 'description';

export interface TextItem {
  entityId: string;
  textKind: TextKind;
  text: string;
  lineIndex: number;
}

export function parseTextBatch(content: string): TextItem[] {
  const items: TextItem[] = [];
  const lines = content.split('\n');
  for (let i = 0; i < lines.length; i++) {
    const line = lines[i].trim();
    if (!line) {
      continue;
    }
    let doc: unknown;
    try {
      doc = JSON.parse(line);
    } catch (err) {
      throw new Error(`line ${i + 1}: invalid JSON: ${(err as Error).message}`);
    }
    if (typeof doc !== 'object' || doc === null || Array.isArray(doc)) {
      throw new Error(`line ${i + 1}: expected a JSON object`);
    }
    const record = doc as Record<string, unknown>;
    const entityId = record.entity_id;
    const textKind = record.text_kind;
    const text = record.text;
    if (typeof entityId !== 'string' || entityId.length === 0) {
      throw new Error(`line ${i + 1}: entity_id must be a non-empty string`);
    }
    if (textKind !== 'tweet' && textKind !== 'description') {
      throw new Error(
        `line ${i + 1}: text_kind must be "tweet" or "description"`,
      );
    }
    if (typeof text !== 'string' || text.length === 0) {
      throw new Error(`line ${i + 1}: text must be a non-empty string`);
    }
    items.push({ entityId, textKind, text, lineIndex: i });
  }
  return items;
}

/**
 * Vector id scheme: tweets get "entity_id#<line index>" so multiple tweets
 * per entity stay distinct; descriptions use the entity id directly.
 */
export function vectorId(item: TextItem): string {
  return item.textKind === 'tweet'
    ? `${item.entityId}#${item.lineIndex}`
    : item.entityId;
}
